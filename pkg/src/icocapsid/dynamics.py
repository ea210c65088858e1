"""Penalized elastodynamics of the cage.

Integrates the first-order system

    X1' = X2
    X2' = F(t) - Upsilon X1 - (1/kappa) N(X1)

where N(U)_i = -{(P_i + u_i) . e_3}^- e_3 pushes penetrating vertices back
above the plane. Unit mass, no damping.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .energy import EnergyModel
from .errors import InstabilityError
from .geometry import N_DOF
from .statics import Z_INDEX

logger = logging.getLogger(__name__)

ForceLike = Union[np.ndarray, Sequence[float], Callable[[float], np.ndarray]]

BLOWUP_FACTOR = 1e3
SCHEMES = ("leapfrog", "euler", "rk4")
SCHEME_ORDER = {"leapfrog": 2, "euler": 1, "rk4": 4}


def penalty_operator(model: EnergyModel, U) -> np.ndarray:
    """N(U): block i is (0, 0, -{gap_i}^-), i.e. min(gap_i, 0) along e_3."""
    U = np.asarray(U, dtype=float).reshape(-1)
    out = np.zeros(N_DOF)
    out[Z_INDEX] = np.minimum(model.geometry.heights + U[Z_INDEX], 0.0)
    return out


def penalty_force(model: EnergyModel, U, kappa: float) -> np.ndarray:
    """(1/kappa) N(U), the term added to the left side of the equation of motion."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return penalty_operator(model, U) / kappa


def penetration(model: EnergyModel, U) -> np.ndarray:
    """{gap_i}^- for i = 1..11."""
    U = np.asarray(U, dtype=float).reshape(-1)
    return np.maximum(-(model.geometry.heights + U[Z_INDEX]), 0.0)


def penalty_energy(model: EnergyModel, U, kappa: float) -> float:
    """(1 / 2 kappa) sum |{gap_i}^-|^2, the potential of (1/kappa) N."""
    p = penetration(model, U)
    return float(p @ p) / (2.0 * kappa)


def stable_dt(model: EnergyModel, kappa: float, safety: float = 0.5) -> float:
    lam_max = float(np.linalg.eigvalsh(model.upsilon)[-1])
    return safety / math.sqrt(lam_max + 1.0 / kappa)


def _force_fn(F: ForceLike) -> Callable[[float], np.ndarray]:
    if callable(F):
        return lambda t: np.asarray(F(t), dtype=float).reshape(N_DOF)
    const = np.asarray(F, dtype=float).reshape(-1)
    if const.shape != (N_DOF,):
        raise ValueError(f"force must have {N_DOF} components")
    const = const.copy()
    const.setflags(write=False)
    return lambda t: const


@dataclass(frozen=True, eq=False)
class PenaltyProblem:
    model: EnergyModel
    kappa: float
    T: float
    F: ForceLike = field(default_factory=lambda: np.zeros(N_DOF))
    U0: np.ndarray = field(default_factory=lambda: np.zeros(N_DOF))
    U1: np.ndarray = field(default_factory=lambda: np.zeros(N_DOF))

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        U0 = np.asarray(self.U0, dtype=float).reshape(-1)
        U1 = np.asarray(self.U1, dtype=float).reshape(-1)
        if U0.shape != (N_DOF,) or U1.shape != (N_DOF,):
            raise ValueError(f"initial data must have {N_DOF} components")
        if not (np.all(np.isfinite(U0)) and np.all(np.isfinite(U1))):
            raise ValueError("initial data must be finite")
        if (self.model.geometry.heights + U0[Z_INDEX]).min() <= 0:
            raise ValueError("initial displacement must keep every free vertex strictly above the plane")
        object.__setattr__(self, "U0", U0)
        object.__setattr__(self, "U1", U1)

    def with_kappa(self, kappa: float) -> "PenaltyProblem":
        return PenaltyProblem(self.model, kappa, self.T, self.F, self.U0, self.U1)

    def force(self, t: float) -> np.ndarray:
        return _force_fn(self.F)(t)


@dataclass(frozen=True, eq=False)
class Trajectory:
    kappa: float
    scheme: str
    times: np.ndarray
    U: np.ndarray  # (n, 33)
    V: np.ndarray  # (n, 33)
    kinetic: np.ndarray
    elastic: np.ndarray
    penalty: np.ndarray
    r_max: np.ndarray
    force_sq: np.ndarray  # |F(t)|^2 at the sample times
    heights: np.ndarray  # reference heights of vertices 1..11

    @property
    def energy(self) -> np.ndarray:
        return self.kinetic + self.elastic + self.penalty

    def gronwall_bound(self) -> np.ndarray:
        """[E(0) + 1/2 int_0^t |F|^2] e^t on the sample grid."""
        dt = np.diff(self.times)
        integral = np.concatenate([[0.0], np.cumsum(0.5 * dt * (self.force_sq[1:] + self.force_sq[:-1]))])
        return (self.energy[0] + 0.5 * integral) * np.exp(self.times)

    def gronwall_excess(self, slack: float = 1e-6) -> float:
        """max_t of E(t) - bound(t) - slack; nonpositive when the bound holds."""
        return float(np.max(self.energy - self.gronwall_bound() - slack))

    def energy_estimate_violation(self) -> float:
        """Largest excess of dE/dt over |F|^2/2 + kinetic + elastic.

        dE/dt is a centered difference, so the result carries O(dt^2)
        integrator error.
        """
        dEdt = np.gradient(self.energy, self.times)
        rhs = 0.5 * self.force_sq + self.kinetic + self.elastic
        return float(np.max(dEdt - rhs))

    @property
    def sup_residual(self) -> float:
        return float(self.r_max.max())

    @property
    def min_gap(self) -> float:
        return float((self.U[:, Z_INDEX] + self.heights).min())

    def decimate(self, max_samples: int = 10_000) -> "Trajectory":
        n = len(self.times)
        if n <= max_samples:
            return self
        idx = np.unique(np.linspace(0, n - 1, max_samples).round().astype(int))
        return Trajectory(
            self.kappa, self.scheme, self.times[idx], self.U[idx], self.V[idx],
            self.kinetic[idx], self.elastic[idx], self.penalty[idx], self.r_max[idx],
            self.force_sq[idx], self.heights,
        )


def _accel(model, f, U, inv_kappa):
    return f - model.upsilon @ U - inv_kappa * penalty_operator(model, U)


def integrate(problem: PenaltyProblem, dt: float | None = None, scheme: str = "leapfrog") -> Trajectory:
    """Integrate the penalized system on [0, T] with uniform steps.

    The step is shrunk so that an integer number of steps lands on T.
    ``leapfrog`` is the drift-kick-drift Stormer-Verlet scheme (order 2,
    force sampled at step midpoints), ``euler`` the symplectic Euler scheme
    (order 1), ``rk4`` the classical explicit Runge-Kutta scheme.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    model = problem.model
    kappa = problem.kappa
    inv_kappa = 1.0 / kappa
    if dt is None:
        dt = stable_dt(model, kappa)
    if not dt > 0:
        raise ValueError("dt must be positive")
    n_steps = max(1, math.ceil(problem.T / dt - 1e-9))
    h = problem.T / n_steps
    force = _force_fn(problem.F)
    ups = model.upsilon
    heights = model.geometry.heights

    times = np.linspace(0.0, problem.T, n_steps + 1)
    Us = np.empty((n_steps + 1, N_DOF))
    Vs = np.empty((n_steps + 1, N_DOF))
    fsq = np.empty(n_steps + 1)
    U = problem.U0.copy()
    V = problem.U1.copy()
    Us[0], Vs[0] = U, V
    f0 = force(0.0)
    fsq[0] = f0 @ f0
    E0 = 0.5 * V @ V + 0.5 * U @ ups @ U + penalty_energy(model, U, kappa)
    integral = 0.0

    for n in range(n_steps):
        t = times[n]
        if scheme == "leapfrog":
            Uh = U + 0.5 * h * V
            V = V + h * _accel(model, force(t + 0.5 * h), Uh, inv_kappa)
            U = Uh + 0.5 * h * V
        elif scheme == "euler":
            V = V + h * _accel(model, force(t), U, inv_kappa)
            U = U + h * V
        else:
            fa, fm, fb = force(t), force(t + 0.5 * h), force(t + h)
            k1u, k1v = V, _accel(model, fa, U, inv_kappa)
            k2u = V + 0.5 * h * k1v
            k2v = _accel(model, fm, U + 0.5 * h * k1u, inv_kappa)
            k3u = V + 0.5 * h * k2v
            k3v = _accel(model, fm, U + 0.5 * h * k2u, inv_kappa)
            k4u = V + h * k3v
            k4v = _accel(model, fb, U + h * k3u, inv_kappa)
            U = U + h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
            V = V + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        Us[n + 1], Vs[n + 1] = U, V
        f = force(times[n + 1])
        fsq[n + 1] = f @ f
        integral += 0.5 * h * (fsq[n] + fsq[n + 1])
        E = 0.5 * V @ V + 0.5 * U @ ups @ U + penalty_energy(model, U, kappa)
        bound = (E0 + 0.5 * integral) * math.exp(times[n + 1])
        if not math.isfinite(E) or E > BLOWUP_FACTOR * bound + 1e-12:
            raise InstabilityError(
                f"energy {E:.3e} exceeds {BLOWUP_FACTOR:g}x the a-priori bound at step {n + 1} "
                f"(t={times[n + 1]:.6g}, dt={h:.3e}, stable dt={stable_dt(model, kappa):.3e})",
                step=n + 1,
                time=float(times[n + 1]),
            )

    kinetic = 0.5 * np.einsum("ij,ij->i", Vs, Vs)
    elastic = 0.5 * np.einsum("ij,jk,ik->i", Us, ups, Us)
    pen = np.maximum(-(heights + Us[:, Z_INDEX]), 0.0)
    traj = Trajectory(
        kappa=kappa,
        scheme=scheme,
        times=times,
        U=Us,
        V=Vs,
        kinetic=kinetic,
        elastic=elastic,
        penalty=np.einsum("ij,ij->i", pen, pen) / (2.0 * kappa),
        r_max=pen.max(axis=1),
        force_sq=fsq,
        heights=heights,
    )
    return traj


def modal_solution(model: EnergyModel, U0, U1, times, F=None) -> tuple[np.ndarray, np.ndarray]:
    """Exact solution of U'' + Upsilon U = F for constant F, by eigen-decomposition.

    Returns (U, V) sampled at ``times``.
    """
    w2, Q = np.linalg.eigh(model.upsilon)
    omega = np.sqrt(w2)
    F = np.zeros(N_DOF) if F is None else np.asarray(F, dtype=float).reshape(-1)
    static = Q @ ((Q.T @ F) / w2)
    c = Q.T @ (np.asarray(U0, dtype=float).reshape(-1) - static)
    d = Q.T @ np.asarray(U1, dtype=float).reshape(-1)
    t = np.asarray(times, dtype=float)[:, None]
    cos, sin = np.cos(omega * t), np.sin(omega * t)
    U = static + (c * cos + d * sin / omega) @ Q.T
    V = (-c * omega * sin + d * cos) @ Q.T
    return U, V


def limit_vi_residual(traj: Trajectory, problem: PenaltyProblem, V_test) -> float:
    """int_0^T (U'' + Upsilon U - F) . (V - U) dt for a constant admissible V.

    U'' comes from differencing the stored velocities, independently of the
    equation of motion. The limit problem requires this to be nonnegative.
    """
    model = problem.model
    V_test = np.asarray(V_test, dtype=float).reshape(-1)
    acc = np.gradient(traj.V, traj.times, axis=0)
    forces = np.array([problem.force(t) for t in traj.times])
    integrand = np.einsum("ij,ij->i", acc + traj.U @ model.upsilon - forces, V_test - traj.U)
    dt = np.diff(traj.times)
    return float(np.sum(0.5 * dt * (integrand[1:] + integrand[:-1])))


@dataclass
class KappaRun:
    kappa: float
    sup_residual: float | None = None
    max_penalty_energy: float | None = None
    trajectory: Trajectory | None = None
    error: str | None = None
    diff_from_previous: float | None = None


@dataclass
class SweepReport:
    runs: list[KappaRun]
    dt: float

    def fitted_exponent(self) -> float:
        """Slope of log sup_t r(t) against log kappa over the successful runs."""
        pts = [(r.kappa, r.sup_residual) for r in self.runs if r.error is None and r.sup_residual]
        if len(pts) < 2:
            return float("nan")
        k, s = np.log(np.array(pts)).T
        return float(np.polyfit(k, s, 1)[0])

    @property
    def residuals(self) -> list[float | None]:
        return [r.sup_residual for r in self.runs]


def kappa_sweep(
    problem: PenaltyProblem,
    kappas: Sequence[float],
    dt: float | None = None,
    scheme: str = "leapfrog",
    workers: int = 1,
) -> SweepReport:
    """Integrate the same problem for each kappa with a common step.

    The default step satisfies the stability bound of the smallest kappa.
    Failures are recorded per kappa and do not abort the sweep.
    """
    kappas = [float(k) for k in kappas]
    if not kappas or any(k <= 0 for k in kappas):
        raise ValueError("kappas must be a nonempty list of positive numbers")
    if any(b >= a for a, b in zip(kappas, kappas[1:])):
        raise ValueError("kappas must be strictly decreasing")
    if dt is None:
        dt = stable_dt(problem.model, min(kappas))

    def run(kappa: float) -> KappaRun:
        try:
            traj = integrate(problem.with_kappa(kappa), dt, scheme)
        except InstabilityError as exc:
            logger.warning("kappa=%g: %s", kappa, exc)
            return KappaRun(kappa, error=str(exc))
        return KappaRun(kappa, traj.sup_residual, float(traj.penalty.max()), traj)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run, kappas))
    else:
        runs = [run(k) for k in kappas]

    for prev, cur in zip(runs, runs[1:]):
        if prev.trajectory is not None and cur.trajectory is not None:
            cur.diff_from_previous = float(np.abs(prev.trajectory.U - cur.trajectory.U).max())
            logger.info("kappa %g -> %g: max trajectory change %.3e", prev.kappa, cur.kappa, cur.diff_from_previous)
    return SweepReport(runs, dt)
