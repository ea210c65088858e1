"""Command-line front end.

    icocapsid geometry    [--config C] [--out DIR] [--matrices]
    icocapsid static      [--config C] [--out DIR]
    icocapsid equilibrium [--config C] [--out DIR] [--stage1 RESULT_JSON]
    icocapsid dynamics    [--config C] [--out DIR]
    icocapsid sweep       [--config C] [--out DIR]
    icocapsid verify      [--config C] [--out DIR] [--seed N]
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import dynamics, energy, geometry, io, statics, verify
from .config import EXPERIMENTS, RunConfig
from .errors import ConfigError, InstabilityError, SolverError

logger = logging.getLogger("icocapsid")


def _model(cfg: RunConfig):
    geom = geometry.build_icosahedron(cfg.edge_length)
    return energy.assemble(geom, cfg.k_s, cfg.k_b)


def _inputs(cfg: RunConfig, F=None) -> dict:
    out = {"edge_length": cfg.edge_length, "k_s": cfg.k_s, "k_b": cfg.k_b}
    if F is not None:
        out["force"] = F
    return out


def run_geometry(cfg: RunConfig, out: Path, matrices: bool = False) -> int:
    model = _model(cfg)
    geom = model.geometry
    io.write_obj(out / "reference.obj", geom, comment=f"icosahedral cage, edge length {cfg.edge_length!r}")
    io.write_json(out / "geometry.json", {
        "edge_length": geom.edge_length,
        "vertices": geom.vertices,
        "edges": geom.edges,
        "faces": geom.faces,
        "barycenters": geom.barycenters,
        "face_adjacency": [dataclasses.asdict(p) for p in geom.face_adjacency],
        "neighbor_sets": [sorted(s) for s in geom.neighbor_sets],
        "angular_defects": geometry.angular_defects(geom),
        "barycenter_spacing": geom.barycenter_spacing,
        "bend_prefactor": model.C,
    })
    if matrices:
        io.write_matrix(out / "sigma.txt", model.sigma, "Sigma (stretch), 3 rows per edge")
        io.write_matrix(out / "theta.txt", model.theta, "Theta (bend), 1 row per adjacent face pair")
        io.write_matrix(out / "upsilon.txt", model.upsilon, "Upsilon, J(U) = 1/2 U^T Upsilon U")
    return 0


def _static_one(model, cfg: RunConfig, F: np.ndarray, out: Path) -> tuple[int, dict]:
    out.mkdir(parents=True, exist_ok=True)
    try:
        res = statics.solve_obstacle(model, F)
    except SolverError as exc:
        record = {
            "kind": "static",
            "status": "failed",
            "error": str(exc),
            "inputs": _inputs(cfg, F),
            "U": exc.iterate,
            "residuals": exc.residuals,
        }
        io.write_json(out / "result.json", record)
        logger.error("static solve failed: %s", exc)
        return 1, record
    top = statics.top_height(model, res.U)
    record = io.static_record(res, kind="static", inputs=_inputs(cfg, F), top_height=top)
    io.write_json(out / "result.json", record)
    io.write_obj(out / "deformed.obj", model.geometry, res.U)
    return 0, record


def run_static(cfg: RunConfig, out: Path) -> int:
    model = _model(cfg)
    io.write_obj(out / "reference.obj", model.geometry)
    F = cfg.force
    if not cfg.force_levels:
        status, rec = _static_one(model, cfg, F, out)
        if status == 0:
            print(f"active set {rec['active']}, top height {rec['top_height']:.6g}")
        return status

    summary, status = [], 0
    for k, fz in enumerate(cfg.force_levels):
        Fk = F.copy()
        Fk[statics.Z_INDEX] = fz
        sub = out / f"level_{k:02d}"
        s, rec = _static_one(model, cfg, Fk, sub)
        status = max(status, s)
        summary.append({"f_z": fz, "dir": sub.name, "status": rec["status"],
                        "active": rec.get("active"), "top_height": rec.get("top_height")})
        print(f"f_z={fz:g}: {rec['status']}, active {rec.get('active')}, top height {rec.get('top_height')}")
    io.write_json(out / "summary.json", {"levels": summary})
    return status


def run_equilibrium(cfg: RunConfig, out: Path, stage1: Path | None) -> int:
    model = _model(cfg)
    path = stage1 or (Path(cfg.stage1_result) if cfg.stage1_result else out / "result.json")
    stage = io.static_result_from_record(io.read_json(path), source=str(path))
    res = statics.solve_adhesion_equilibrium(model, stage.contact.active)
    record = io.static_record(
        res, kind="equilibrium", inputs={**_inputs(cfg), "stage1": str(path)},
        top_height=statics.top_height(model, res.U),
    )
    record["min_gap"] = float(statics.gaps(model, res.U).min())
    io.write_json(out / "result.json", record)
    io.write_obj(out / "equilibrium.obj", model.geometry, res.U)
    print(f"pinned {list(res.pinned)}, top height {record['top_height']:.6g}")
    return 0


def _problem(cfg: RunConfig, model, kappa: float) -> dynamics.PenaltyProblem:
    return dynamics.PenaltyProblem(model, kappa, cfg.T, F=cfg.force, U0=cfg.U0, U1=cfg.U1)


def _traj_summary(traj: dynamics.Trajectory) -> dict:
    return {
        "kappa": traj.kappa,
        "scheme": traj.scheme,
        "dt": float(traj.times[1] - traj.times[0]),
        "steps": len(traj.times) - 1,
        "sup_residual": traj.sup_residual,
        "max_penalty_energy": float(traj.penalty.max()),
        "min_gap": traj.min_gap,
        "gronwall_excess": traj.gronwall_excess(),
    }


def run_dynamics(cfg: RunConfig, out: Path) -> int:
    model = _model(cfg)
    kappa = cfg.kappa_list[0]
    try:
        traj = dynamics.integrate(_problem(cfg, model, kappa), cfg.dt, cfg.scheme)
    except InstabilityError as exc:
        io.write_json(out / "summary.json", {"status": "failed", "error": str(exc), "step": exc.step})
        logger.error("%s", exc)
        return 1
    io.write_trajectory_csv(out / "trajectory.csv", traj, cfg.max_samples)
    io.write_obj(out / "final.obj", model.geometry, traj.U[-1])
    io.write_json(out / "summary.json", {"status": "ok", **_traj_summary(traj)})
    print(f"kappa={kappa:g}: sup penetration {traj.sup_residual:.3e}")
    return 0


def run_sweep(cfg: RunConfig, out: Path) -> int:
    model = _model(cfg)
    report = dynamics.kappa_sweep(_problem(cfg, model, cfg.kappa_list[0]), cfg.kappa_list, cfg.dt, cfg.scheme)
    runs = []
    for k, run in enumerate(report.runs):
        entry = {"kappa": run.kappa, "error": run.error}
        if run.trajectory is not None:
            name = f"trajectory_{k:02d}.csv"
            io.write_trajectory_csv(out / name, run.trajectory, cfg.max_samples)
            entry.update(_traj_summary(run.trajectory), csv=name, diff_from_previous=run.diff_from_previous)
        runs.append(entry)
        print(f"kappa={run.kappa:g}: " + (run.error or f"sup penetration {run.sup_residual:.3e}"))
    exponent = report.fitted_exponent()
    io.write_json(out / "sweep.json", {"dt": report.dt, "runs": runs, "fitted_exponent": exponent})
    print(f"fitted exponent {exponent:.4f}")
    return 0 if all(r.error is None for r in report.runs) else 1


def run_verify(cfg: RunConfig, out: Path, seed: int) -> int:
    checks = verify.run_checks(cfg.edge_length, cfg.k_s, cfg.k_b, seed=seed)
    ok = all(c.passed for c in checks)
    io.write_json(out / "verify.json", {"seed": seed, "passed": ok, "checks": [c.as_dict() for c in checks]})
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.3e} {c.relation} {c.threshold:g}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="icocapsid", description="Icosahedral capsid on a rigid plane.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized checks in verify")
        if name == "geometry":
            p.add_argument("--matrices", action="store_true", help="also dump Sigma, Theta, Upsilon")
        if name == "equilibrium":
            p.add_argument("--stage1", type=Path, help="result.json of a static run")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            data = io.read_json(args.config)
            if data.get("experiment", args.command) != args.command:
                raise ConfigError(f"config experiment {data['experiment']!r} does not match subcommand {args.command!r}")
            cfg = RunConfig.from_dict({**data, "experiment": args.command})
        else:
            cfg = RunConfig(experiment=args.command)
        out = args.out or Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "geometry":
            return run_geometry(cfg, out, args.matrices)
        if args.command == "static":
            return run_static(cfg, out)
        if args.command == "equilibrium":
            return run_equilibrium(cfg, out, args.stage1)
        if args.command == "dynamics":
            return run_dynamics(cfg, out)
        if args.command == "sweep":
            return run_sweep(cfg, out)
        return run_verify(cfg, out, args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
