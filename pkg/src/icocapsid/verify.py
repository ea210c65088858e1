"""Invariant suite behind the ``verify`` subcommand.

Each check records the measured value, the threshold and whether it passed.
Randomized test vectors come from ``numpy.random.default_rng(seed)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import dynamics, energy, geometry, statics
from .config import REFERENCE_FORCE_LEVELS


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    relation: str = "<="

    def as_dict(self) -> dict:
        return asdict(self)


def _le(name, value, threshold):
    return Check(name, float(value), float(threshold), bool(value <= threshold), "<=")


def _gt(name, value, threshold):
    return Check(name, float(value), float(threshold), bool(value > threshold), ">")


def fd_gradient_error(model, U, rel_step: float = 1e-6) -> float:
    """Relative error between the gradient and central differences of J."""
    h = rel_step * max(1.0, np.linalg.norm(U))
    fd = np.empty_like(U)
    for k in range(U.size):
        e = np.zeros_like(U)
        e[k] = h
        fd[k] = (energy.total_energy(model, U + e) - energy.total_energy(model, U - e)) / (2 * h)
    g = energy.gradient(model, U)
    return float(np.linalg.norm(g - fd) / np.linalg.norm(g))


def linearization_ratios(model, U, eps: float = 1e-2) -> float:
    """Error ratio of the linearized dihedral change at eps and eps / 2."""
    geom = model.geometry
    ref = geometry.dihedral_angles(geom)
    errs = []
    for e in (eps, eps / 2):
        pos, _ = geometry.deformed_positions(geom, e * U)
        exact = ref - geometry.dihedral_angles(geom, pos)
        errs.append(np.abs(exact - energy.dihedral_change(model, e * U)).max())
    return float(errs[0] / errs[1])


def random_feasible(model, rng, n: int, scale: float = 3.0) -> np.ndarray:
    """Random points of the admissible set, some of them on the plane."""
    V = scale * rng.normal(size=(n, geometry.N_DOF))
    z = V[:, statics.Z_INDEX]
    lb = -model.geometry.heights
    V[:, statics.Z_INDEX] = np.where(rng.random(z.shape) < 0.3, lb, np.maximum(z, lb))
    return V


def vi_certificate(model, F, U, rng, n: int = 100) -> float:
    """min over feasible V of (Upsilon U - F).(V - U) + 1e-8 (1 + |V - U|)."""
    g = model.upsilon @ U - F
    worst = np.inf
    for V in random_feasible(model, rng, n):
        d = V - U
        worst = min(worst, g @ d + 1e-8 * (1 + np.linalg.norm(d)))
    return float(worst)


def penalty_pairs(model, rng, n: int = 100):
    """Random displacement pairs straddling the plane."""
    for _ in range(n):
        U = 3.0 * rng.normal(size=geometry.N_DOF)
        V = 3.0 * rng.normal(size=geometry.N_DOF)
        U[statics.Z_INDEX] -= model.geometry.heights
        V[statics.Z_INDEX] -= model.geometry.heights
        yield U, V


def run_checks(edge_length: float = 3.0, k_s: float = 0.25, k_b: float = 1.7, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    geom = geometry.build_icosahedron(edge_length)
    model = energy.assemble(geom, k_s, k_b)
    checks: list[Check] = []

    defects = geometry.angular_defects(geom)
    checks.append(_le("descartes_sum_minus_4pi", abs(defects.sum() - 4 * np.pi), 1e-10))
    checks.append(_le("defect_minus_pi_over_3", np.abs(defects - np.pi / 3).max(), 1e-12))
    lengths = np.array([np.linalg.norm(geom.vertices[i] - geom.vertices[j]) for i, j in geom.edges])
    checks.append(_le("edge_length_error", np.abs(lengths - edge_length).max() / edge_length, 1e-12))

    pre = np.array([energy.bend_prefactor(geom, p) for p in geom.face_adjacency])
    checks.append(_le("bend_prefactor_spread", np.abs(pre - model.C).max() / model.C, 1e-10))

    spec = energy.certify_spectrum(model)
    checks.append(_gt("stretch_min_eigenvalue", spec.min_eig_stretch, 0.0))
    checks.append(_le("theta_min_over_max_eigenvalue", spec.min_eig_theta / spec.max_eig_theta, 1e-10))
    checks.append(_gt("null_vector_min_stretch_energy", spec.null_stretch_energies.min(), 0.0))
    checks.append(_le("upsilon_asymmetry", np.abs(model.upsilon - model.upsilon.T).max() / np.abs(model.upsilon).max(), 1e-12))

    grad_err = max(fd_gradient_error(model, rng.normal(size=geometry.N_DOF)) for _ in range(20))
    checks.append(_le("gradient_fd_relative_error", grad_err, 1e-6))
    ratios = [linearization_ratios(model, rng.normal(size=geometry.N_DOF)) for _ in range(10)]
    checks.append(_le("linearization_ratio_deviation_from_4", max(abs(r - 4) for r in ratios), 1.0))

    forces = [statics.uniform_force(f) for f in REFERENCE_FORCE_LEVELS]
    for _ in range(20):
        F = 3.0 * rng.normal(size=geometry.N_DOF)
        F[statics.Z_INDEX] -= 3.0
        forces.append(F)
    agree, kkt, vi = 0.0, 0.0, np.inf
    for F in forces:
        res = statics.solve_obstacle(model, F)
        oracle = statics.oracle_projected_gradient(model, F)
        agree = max(agree, np.abs(oracle - res.U).max() / (1 + np.linalg.norm(res.U)))
        kkt = max(kkt, max(res.residuals.values()))
        vi = min(vi, vi_certificate(model, F, res.U, rng))
    checks.append(_le("pdas_vs_oracle", agree, 1e-6))
    checks.append(_le("kkt_residual", kkt, 1e-8))
    checks.append(Check("vi_certificate_min", float(vi), 0.0, bool(vi >= 0), ">="))

    heights = [statics.top_height(model, statics.solve_obstacle(model, F).U) for F in forces[:4]]
    checks.append(_le("top_height_increase_over_sweep", max(np.diff(heights).max(), 0.0), 0.0))

    mono, lip = np.inf, 0.0
    for U, V in penalty_pairs(model, rng):
        dN = dynamics.penalty_operator(model, U) - dynamics.penalty_operator(model, V)
        mono = min(mono, dN @ (U - V))
        lip = max(lip, np.linalg.norm(dN) - np.linalg.norm((U - V)[statics.Z_INDEX]))
    checks.append(Check("penalty_monotonicity_min", float(mono), 0.0, bool(mono >= 0), ">="))
    checks.append(_le("penalty_lipschitz_excess", lip, 1e-15))

    prob = dynamics.PenaltyProblem(model, 1e-2, 10.0, F=statics.uniform_force(-1.0))
    traj = dynamics.integrate(prob)
    checks.append(_le("gronwall_excess", traj.gronwall_excess(1e-6), 0.0))

    U1 = 0.05 * rng.normal(size=geometry.N_DOF)
    free = dynamics.PenaltyProblem(model, 1e-2, 1.0, U1=U1)
    errs = []
    for dt in (0.02, 0.01):
        tr = dynamics.integrate(free, dt)
        exact, _ = dynamics.modal_solution(model, free.U0, U1, tr.times[-1:])
        errs.append(np.abs(tr.U[-1] - exact[0]).max())
    checks.append(_le("modal_refinement_ratio_deviation_from_4", abs(errs[0] / errs[1] - 4), 1.0))
    return checks
