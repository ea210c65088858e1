"""Static obstacle problem and the irreversible-adhesion equilibrium.

Both are strictly convex QPs over R^33 whose only constraints act on the
z-components of the free vertices:

    minimize   1/2 U^T Upsilon U - F . U
    subject to (P_i + u_i) . e_3 >= 0        i = 1..11  (obstacle)
               (P_i + u_i) . e_3 == 0        i in pinned (adhesion)

Multipliers follow the sign convention Upsilon U - F = sum_i lambda_i e_3^(i),
so lambda_i >= 0 is an upward contact reaction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergyModel
from .errors import OracleError, SolverError
from .geometry import N_DOF, N_FREE

logger = logging.getLogger(__name__)

Z_INDEX = np.arange(N_FREE) * 3 + 2
KKT_TOL = 1e-8


def uniform_force(fz: float, fx: float = 0.0, fy: float = 0.0) -> np.ndarray:
    return np.tile([fx, fy, fz], N_FREE).astype(float)


def _as_force(F) -> np.ndarray:
    F = np.asarray(F, dtype=float).reshape(-1)
    if F.shape != (N_DOF,) or not np.all(np.isfinite(F)):
        raise ValueError(f"force must be {N_DOF} finite components")
    return F


def gaps(model: EnergyModel, U) -> np.ndarray:
    """(P_i + u_i) . e_3 for i = 1..11."""
    return model.geometry.heights + np.asarray(U, dtype=float).reshape(-1)[Z_INDEX]


def top_height(model: EnergyModel, U) -> float:
    return float(gaps(model, U)[-1])


@dataclass(frozen=True)
class ContactState:
    active: tuple[int, ...]  # vertex indices in 1..11
    multipliers: tuple[float, ...]

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.active, self.multipliers))


@dataclass(frozen=True)
class StaticResult:
    U: np.ndarray
    contact: ContactState
    iterations: int
    residuals: dict = field(default_factory=dict)
    pinned: tuple[int, ...] = ()


def kkt_residuals(model: EnergyModel, F, U, contact: ContactState, pinned=()) -> dict:
    """Stationarity, feasibility and complementarity of a candidate solution.

    ``pinned`` vertices are equality constraints: their multipliers may take
    either sign and their gap must vanish.
    """
    F = _as_force(F)
    U = np.asarray(U, dtype=float).reshape(-1)
    lam = np.zeros(N_FREE)
    for v, m in zip(contact.active, contact.multipliers):
        lam[v - 1] = m
    r = model.upsilon @ U - F
    r[Z_INDEX] -= lam
    g = gaps(model, U)
    ineq = np.array([v not in pinned for v in range(1, N_FREE + 1)])
    eq = ~ineq
    return {
        "stationarity": float(np.abs(r).max()),
        "primal_feasibility": float(max(0.0, -g[ineq].min(initial=0.0))),
        "equality": float(np.abs(g[eq]).max(initial=0.0)),
        "dual_feasibility": float(max(0.0, -lam[ineq].min(initial=0.0))),
        "complementarity": float(np.abs(lam[ineq] * g[ineq]).max(initial=0.0)),
    }


def _solve_fixed(ups: np.ndarray, F: np.ndarray, fixed: np.ndarray, values: np.ndarray):
    """Minimize 1/2 U^T ups U - F.U with U[fixed] = values by block elimination."""
    free = np.setdiff1d(np.arange(N_DOF), fixed)
    U = np.zeros(N_DOF)
    U[fixed] = values
    rhs = F[free] - ups[np.ix_(free, fixed)] @ values
    try:
        U[free] = np.linalg.solve(ups[np.ix_(free, free)], rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError("singular reduced KKT system", iterate=U) from exc
    lam = ups[fixed] @ U - F[fixed]
    return U, lam


def _pdas(model, F, pinned, initial_active, max_iterations, c=1.0):
    """Primal-dual active set iteration on the z lower bounds.

    The active set is updated by the sign of lambda_i - c * gap_i; ties go to
    the inactive set. Stops when the set repeats.
    """
    ups = model.upsilon
    lb = -model.geometry.heights
    pinned_idx = np.array(sorted(v - 1 for v in pinned), dtype=int)
    is_pinned = np.zeros(N_FREE, dtype=bool)
    is_pinned[pinned_idx] = True
    active = np.zeros(N_FREE, dtype=bool)
    active[[v - 1 for v in initial_active]] = True
    active &= ~is_pinned

    U = np.zeros(N_DOF)
    lam = np.zeros(N_FREE)
    for it in range(1, max_iterations + 1):
        fixed_v = np.flatnonzero(active | is_pinned)
        U, lam_fixed = _solve_fixed(ups, F, Z_INDEX[fixed_v], lb[fixed_v])
        lam = np.zeros(N_FREE)
        lam[fixed_v] = lam_fixed
        gap = U[Z_INDEX] - lb
        new_active = (lam - c * gap > 0) & ~is_pinned
        if np.array_equal(new_active, active):
            return U, lam, active | is_pinned, it
        active = new_active
    raise SolverError(
        f"primal-dual active set did not converge in {max_iterations} iterations",
        iterate=U,
        residuals={"active": [int(v) + 1 for v in np.flatnonzero(active)]},
    )


def _result(model, F, U, lam, fixed_mask, iterations, pinned=()):
    verts = tuple(int(v) + 1 for v in np.flatnonzero(fixed_mask))
    contact = ContactState(verts, tuple(float(lam[v - 1]) for v in verts))
    res = kkt_residuals(model, F, U, contact, pinned)
    return StaticResult(U, contact, iterations, res, tuple(sorted(pinned)))


def solve_obstacle(
    model: EnergyModel,
    F,
    *,
    initial_active=(),
    max_iterations: int = 100,
    tol: float = KKT_TOL,
) -> StaticResult:
    """Minimize 1/2 U^T Upsilon U - F.U over the half-space constraints.

    Raises SolverError if the active set keeps changing past
    ``max_iterations`` or the final KKT residuals exceed ``tol``.
    """
    F = _as_force(F)
    U, lam, mask, it = _pdas(model, F, (), initial_active, max_iterations)
    result = _result(model, F, U, lam, mask, it)
    bad = {k: v for k, v in result.residuals.items() if v > tol}
    if bad:
        raise SolverError(f"KKT residuals above {tol}: {bad}", iterate=U, residuals=result.residuals)
    return result


def solve_adhesion_equilibrium(
    model: EnergyModel,
    pinned,
    *,
    F=None,
    enforce_obstacle: bool = True,
    max_iterations: int = 100,
) -> StaticResult:
    """Zero-force equilibrium with the ``pinned`` vertices held on the plane.

    With ``enforce_obstacle`` the remaining vertices keep the unilateral
    constraint; a warning is logged whenever it binds.
    """
    pinned = frozenset(int(v) for v in pinned)
    if not pinned <= set(range(1, N_FREE + 1)):
        raise ValueError(f"pinned vertices must lie in 1..11, got {sorted(pinned)}")
    F = np.zeros(N_DOF) if F is None else _as_force(F)
    if enforce_obstacle:
        U, lam, mask, it = _pdas(model, F, pinned, (), max_iterations)
        extra = sorted(int(v) + 1 for v in np.flatnonzero(mask) if v + 1 not in pinned)
        if extra:
            logger.warning("obstacle binds at non-pinned vertices %s in adhesion stage", extra)
    else:
        idx = np.array(sorted(v - 1 for v in pinned), dtype=int)
        U, lam_fixed = _solve_fixed(model.upsilon, F, Z_INDEX[idx], -model.geometry.heights[idx])
        lam = np.zeros(N_FREE)
        lam[idx] = lam_fixed
        mask = np.zeros(N_FREE, dtype=bool)
        mask[idx] = True
        it = 1
    return _result(model, F, U, lam, mask, it, pinned)


def oracle_projected_gradient(
    model: EnergyModel,
    F,
    tol: float = 1e-22,
    *,
    max_iterations: int = 10**6,
    U0=None,
) -> np.ndarray:
    """Projected gradient descent with step 1 / lambda_max(Upsilon).

    Independent check on solve_obstacle. Stops once the energy decrease of a
    step falls below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    F = _as_force(F)
    ups = model.upsilon
    lb = -model.geometry.heights
    step = 1.0 / np.linalg.eigvalsh(ups)[-1]
    x = np.zeros(N_DOF) if U0 is None else np.array(U0, dtype=float).reshape(-1)
    x[Z_INDEX] = np.maximum(x[Z_INDEX], lb)
    for _ in range(max_iterations):
        g = ups @ x - F
        y = x - step * g
        y[Z_INDEX] = np.maximum(y[Z_INDEX], lb)
        d = y - x
        # exact decrease of the quadratic, free of cancellation
        decrease = -(g @ d + 0.5 * d @ ups @ d)
        x = y
        if decrease < tol:
            return x
    raise OracleError(f"projected gradient hit the {max_iterations} iteration cap", iterate=x)
