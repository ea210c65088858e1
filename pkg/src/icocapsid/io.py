"""File formats: Wavefront OBJ, trajectory CSV, plain-text matrices, JSON records.

OBJ, CSV and matrix files write every float with 17 significant digits.
JSON uses Python's shortest round-trip float repr, which is equally lossless.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .geometry import N_DOF, N_FREE, CapsidGeometry, deformed_positions, oriented_faces
from .statics import ContactState, StaticResult

FLOAT_FMT = "%.17g"


def _f(x: float) -> str:
    return FLOAT_FMT % x


def write_obj(path, geom: CapsidGeometry, U=None, comment: str | None = None) -> None:
    """Write the (optionally displaced) cage as a triangle mesh, 1-based indices."""
    positions = geom.vertices if U is None else deformed_positions(geom, U)[0]
    lines = []
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines += [f"v {_f(x)} {_f(y)} {_f(z)}" for x, y, z in positions]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in oriented_faces(geom)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj(path) -> tuple[np.ndarray, list[tuple[int, int, int]]]:
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            verts.append([float(p) for p in parts[1:4]])
        elif parts[0] == "f":
            faces.append(tuple(int(p.split("/")[0]) - 1 for p in parts[1:4]))
    return np.array(verts), faces


def trajectory_header() -> list[str]:
    u = [f"u_{i}{c}" for i in range(1, N_FREE + 1) for c in "xyz"]
    v = [f"v_{i}{c}" for i in range(1, N_FREE + 1) for c in "xyz"]
    return ["t", *u, *v, "E_kin", "E_el", "E_pen", "r_max"]


def write_trajectory_csv(path, traj, max_samples: int = 10_000) -> None:
    traj = traj.decimate(max_samples)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header())
        for n, t in enumerate(traj.times):
            row = [t, *traj.U[n], *traj.V[n], traj.kinetic[n], traj.elastic[n], traj.penalty[n], traj.r_max[n]]
            w.writerow([_f(x) for x in row])


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    """Columns keyed by header name, plus stacked ``U`` and ``V`` arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array(rows[1:], dtype=float)
    if header != trajectory_header():
        raise ValueError(f"{path}: unexpected trajectory header")
    cols = {name: data[:, k] for k, name in enumerate(header)}
    cols["U"] = data[:, 1 : 1 + N_DOF]
    cols["V"] = data[:, 1 + N_DOF : 1 + 2 * N_DOF]
    return cols


def write_matrix(path, a: np.ndarray, name: str = "") -> None:
    """Dense matrix: '# name' line, 'rows cols' line, then one row per line."""
    a = np.atleast_2d(a)
    with open(path, "w") as fh:
        fh.write(f"# {name}\n" if name else "")
        fh.write(f"{a.shape[0]} {a.shape[1]}\n")
        for row in a:
            fh.write(" ".join(_f(x) for x in row) + "\n")


def read_matrix(path) -> np.ndarray:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    rows, cols = map(int, lines[0].split())
    a = np.array([[float(x) for x in ln.split()] for ln in lines[1:]])
    if a.shape != (rows, cols):
        raise ValueError(f"{path}: declared shape {(rows, cols)} but read {a.shape}")
    return a


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path, record: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(record), indent=2, allow_nan=True) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def static_record(result: StaticResult, *, kind: str, inputs: dict, top_height: float) -> dict:
    return {
        "kind": kind,
        "status": "ok",
        "inputs": inputs,
        "U": result.U,
        "active": list(result.contact.active),
        "multipliers": list(result.contact.multipliers),
        "pinned": list(result.pinned),
        "residuals": result.residuals,
        "iterations": result.iterations,
        "top_height": top_height,
    }


def _field(record: dict, name: str, source: str):
    if name not in record:
        raise ConfigError(f"{source}: missing field {name!r}")
    return record[name]


def static_result_from_record(record: dict, source: str = "result") -> StaticResult:
    """Rebuild a StaticResult from its JSON record, validating every field."""
    U = np.asarray(_field(record, "U", source), dtype=float)
    if U.shape != (N_DOF,) or not np.all(np.isfinite(U)):
        raise ConfigError(f"{source}: field 'U' must hold {N_DOF} finite numbers")
    active = _field(record, "active", source)
    mult = _field(record, "multipliers", source)
    if not isinstance(active, list) or not all(isinstance(v, int) and 1 <= v <= N_FREE for v in active):
        raise ConfigError(f"{source}: field 'active' must be a list of vertex indices in 1..11")
    if not isinstance(mult, list) or len(mult) != len(active):
        raise ConfigError(f"{source}: field 'multipliers' must match 'active' in length")
    return StaticResult(
        U=U,
        contact=ContactState(tuple(active), tuple(float(m) for m in mult)),
        iterations=int(_field(record, "iterations", source)),
        residuals={k: float(v) for k, v in _field(record, "residuals", source).items()},
        pinned=tuple(record.get("pinned", ())),
    )
