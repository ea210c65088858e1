"""Acceptance gate: one test per criterion, each at its stated tolerance and time budget.

Every test prints a single PASS/FAIL line with the measured quantities.
Run with ``pytest tests/test_acceptance.py -v`` (lines appear uncaptured)
or directly with ``python tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from icocapsid.config import REFERENCE_FORCE_LEVELS
from icocapsid.dynamics import PenaltyProblem, integrate, kappa_sweep, modal_solution, penalty_operator
from icocapsid.energy import assemble, bend_prefactor, certify_spectrum
from icocapsid.geometry import angular_defects, build_icosahedron
from icocapsid.statics import (
    Z_INDEX,
    oracle_projected_gradient,
    solve_adhesion_equilibrium,
    solve_obstacle,
    top_height,
    uniform_force,
)
from icocapsid.verify import fd_gradient_error, linearization_ratios, vi_certificate

GEOM = build_icosahedron(3.0)
MODEL = assemble(GEOM, 0.25, 1.7)
KAPPAS = [1e-1, 1e-2, 1e-3, 1e-4]


@pytest.fixture
def report(capsys):
    def emit(number, title, passed, detail, elapsed, budget):
        ok = passed and elapsed < budget
        line = f"{'PASS' if ok else 'FAIL'}  [{number:>2}] {title}: {detail}; {elapsed * 1e3:.3g} ms (budget {budget * 1e3:g} ms)"
        with capsys.disabled():
            print("\n" + line)
        assert passed, line
        assert elapsed < budget, line

    return emit


def best_time(fn, repeats=20):
    best, out = np.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def test_01_defects_sum_to_4pi(report):
    d, elapsed = best_time(lambda: angular_defects(GEOM))
    sum_err = abs(d.sum() - 4 * np.pi)
    each_err = np.abs(d - np.pi / 3).max()
    report(1, "angular defects", sum_err <= 1e-10 and each_err <= 1e-12,
           f"|sum - 4pi| = {sum_err:.2e} (<= 1e-10), max |d - pi/3| = {each_err:.2e} (<= 1e-12)", elapsed, 1e-3)


def test_02_bend_prefactor_uniform(report):
    def measure():
        return np.array([bend_prefactor(GEOM, p) for p in GEOM.face_adjacency])

    pre, elapsed = best_time(measure, 5)
    spread = np.abs(pre - pre.mean()).max() / pre.mean()
    report(2, "bending prefactor uniformity", len(pre) == 30 and spread <= 1e-10,
           f"30 pairs, C = {pre.mean():.10g}, relative spread {spread:.2e} (<= 1e-10)", elapsed, 10e-3)


def test_03_spectrum(report):
    rep, elapsed = best_time(lambda: certify_spectrum(MODEL), 3)
    ratio = rep.min_eig_theta / rep.max_eig_theta
    null_min = rep.null_stretch_energies.min()
    ok = rep.min_eig_stretch > 0 and ratio <= 1e-10 and null_min > 0
    report(3, "spectral facts", ok,
           f"stretch min eig {rep.min_eig_stretch:.4g} (> 0), Theta^T Theta min/max {ratio:.2e} (<= 1e-10), "
           f"{rep.theta_null_space.shape[1]} null vectors with min stretch energy {null_min:.4g} (> 0)", elapsed, 0.1)


def test_04_gradient(report):
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    worst = max(fd_gradient_error(MODEL, rng.normal(size=33)) for _ in range(20))
    elapsed = time.perf_counter() - t0
    report(4, "gradient vs central differences", worst <= 1e-6,
           f"max relative error over 20 displacements {worst:.2e} (<= 1e-6)", elapsed, 1.0)


def test_05_linearization_order(report):
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    ratios = np.array([linearization_ratios(MODEL, rng.normal(size=33)) for _ in range(10)])
    elapsed = time.perf_counter() - t0
    report(5, "dihedral linearization order", bool(np.all((ratios >= 3) & (ratios <= 5))),
           f"error ratios at eps -> eps/2 in [{ratios.min():.4f}, {ratios.max():.4f}] (within [3, 5])", elapsed, 1.0)


def test_06_qp_correctness(report):
    rng = np.random.default_rng(6)
    forces = [uniform_force(f) for f in REFERENCE_FORCE_LEVELS]
    for _ in range(20):
        F = 3.0 * rng.normal(size=33)
        F[Z_INDEX] -= 3.0
        forces.append(F)
    t0 = time.perf_counter()
    agree, kkt, vi = 0.0, 0.0, np.inf
    for F in forces:
        res = solve_obstacle(MODEL, F)
        oracle = oracle_projected_gradient(MODEL, F)
        agree = max(agree, np.abs(oracle - res.U).max())
        kkt = max(kkt, max(res.residuals.values()))
        vi = min(vi, vi_certificate(MODEL, F, res.U, rng, 100))
    elapsed = time.perf_counter() - t0
    report(6, "obstacle QP", agree <= 1e-6 and kkt <= 1e-8 and vi >= 0,
           f"{len(forces)} forces: max |PDAS - oracle| {agree:.2e} (<= 1e-6), KKT {kkt:.2e} (<= 1e-8), "
           f"min VI certificate {vi:.3g} (>= 0)", elapsed, 10.0)


def test_07_force_sweep_findings(report):
    t0 = time.perf_counter()
    results = [solve_obstacle(MODEL, uniform_force(f)) for f in REFERENCE_FORCE_LEVELS]
    heights = [top_height(MODEL, r.U) for r in results]
    monotone = all(b <= a for a, b in zip(heights, heights[1:]))
    groups = {}
    for r in results:
        groups.setdefault(r.contact.active, []).append(solve_adhesion_equilibrium(MODEL, r.contact.active).U)
    spread = max(np.abs(U - Us[0]).max() for Us in groups.values() for U in Us)
    shared = max(len(v) for v in groups.values())
    elapsed = time.perf_counter() - t0
    report(7, "force sweep findings", monotone and shared >= 2 and spread <= 1e-12,
           f"top heights {[round(h, 12) for h in heights]} nonincreasing={monotone}, "
           f"{shared} forces share an active set, equilibrium spread {spread:.1e} (<= 1e-12)", elapsed, 10.0)


def test_08_penalty_operator(report):
    rng = np.random.default_rng(8)
    h = GEOM.heights
    pairs = []
    for _ in range(100):
        U, V = 3.0 * rng.normal(size=(2, 33))
        U[Z_INDEX] -= h
        V[Z_INDEX] -= h
        pairs.append((U, V))
    t0 = time.perf_counter()
    mono, lip = np.inf, 0.0
    for U, V in pairs:
        dN = penalty_operator(MODEL, U) - penalty_operator(MODEL, V)
        mono = min(mono, dN @ (U - V))
        lip = max(lip, np.linalg.norm(dN) / np.linalg.norm(U - V))
    elapsed = time.perf_counter() - t0
    report(8, "penalty operator", mono >= 0 and lip <= 1 + 1e-12,
           f"min (N(U)-N(V)).(U-V) = {mono:.3g} (>= 0), max |dN|/|dU| = {lip:.6f} (<= 1)", elapsed, 0.1)


def test_09_gronwall_bound(report):
    rng = np.random.default_rng(9)
    problems = [PenaltyProblem(MODEL, k, 10.0, F=uniform_force(-1.0)) for k in KAPPAS]
    problems.append(PenaltyProblem(MODEL, 1e-3, 10.0, F=lambda t: uniform_force(-2.0 * np.sin(t) ** 2),
                                   U1=0.3 * rng.normal(size=33)))
    problems.append(PenaltyProblem(MODEL, 1e-2, 10.0, U1=0.05 * rng.normal(size=33)))
    t0 = time.perf_counter()
    excess = [integrate(p).gronwall_excess(slack=1e-6) for p in problems]
    elapsed = time.perf_counter() - t0
    report(9, "Gronwall energy bound", max(excess) <= 0,
           f"{len(problems)} trajectories, T = 10, stability-bound dt, max E - bound - 1e-6 = {max(excess):.3g} (<= 0)",
           elapsed, 30.0)


def test_10_kappa_decay(report):
    prob = PenaltyProblem(MODEL, KAPPAS[0], 10.0, F=uniform_force(-1.0))
    t0 = time.perf_counter()
    rep = kappa_sweep(prob, KAPPAS)
    elapsed = time.perf_counter() - t0
    res = rep.residuals
    ok_runs = all(r is not None and r > 0 for r in res)
    decreasing = ok_runs and all(b < a for a, b in zip(res, res[1:]))
    slope = rep.fitted_exponent()
    report(10, "penalty residual decay", decreasing and 0.35 <= slope <= 0.65,
           f"sup penetration {[f'{r:.4g}' for r in res]} decreasing={decreasing}, "
           f"log-log slope {slope:.4f} (within [0.35, 0.65]), dt = {rep.dt:.4g}", elapsed, 300.0)


def test_11_contact_free_modal(report):
    rng = np.random.default_rng(11)
    prob = PenaltyProblem(MODEL, 1e-2, 2.0, U0=0.05 * rng.normal(size=33), U1=0.05 * rng.normal(size=33))
    t0 = time.perf_counter()
    errs, contact = [], 0.0
    for dt in (0.02, 0.01, 0.005):
        tr = integrate(prob, dt)
        contact = max(contact, tr.sup_residual)
        exact, _ = modal_solution(MODEL, prob.U0, prob.U1, tr.times)
        errs.append(np.abs(tr.U - exact).max())
    elapsed = time.perf_counter() - t0
    ratios = [float(a / b) for a, b in zip(errs, errs[1:])]
    ok = contact == 0 and all(3 <= r <= 5 for r in ratios) and errs[-1] <= 1e-4
    report(11, "contact-free modal match", ok,
           f"no contact={contact == 0}, max errors {[f'{e:.3e}' for e in errs]}, "
           f"refinement ratios {[round(r, 4) for r in ratios]} (order 2: within [3, 5])", elapsed, 10.0)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
