"""Run configuration: one JSON document per experiment, unknown keys rejected.

Example::

    {
      "experiment": "static",
      "edge_length": 3.0, "k_s": 0.25, "k_b": 1.7,
      "force_spec": {"uniform": [0, 0, -5.3]},
      "force_levels": [-5.3, -5.7, -6.0, -7.0]
    }

``force_spec`` (and the dynamics initial data) is either
``{"uniform": [fx, fy, fz]}`` applied to every free vertex or
``{"table": [[fx, fy, fz], ...]}`` with 11 rows for vertices 1..11.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .geometry import N_FREE

EXPERIMENTS = ("geometry", "static", "equilibrium", "dynamics", "sweep", "verify")
REFERENCE_FORCE_LEVELS = (-5.3, -5.7, -6.0, -7.0)


def parse_vertex_field(spec, name: str = "force_spec") -> np.ndarray:
    """Turn a uniform/table spec into a 33-vector."""
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError(f"{name}: expected {{'uniform': [x, y, z]}} or {{'table': [[x, y, z] x 11]}}")
    (kind, value), = spec.items()
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}.{kind}: not numeric") from exc
    if kind == "uniform":
        if arr.shape != (3,):
            raise ConfigError(f"{name}.uniform must have 3 components")
        arr = np.tile(arr, N_FREE)
    elif kind == "table":
        if arr.shape != (N_FREE, 3):
            raise ConfigError(f"{name}.table must have {N_FREE} rows of 3 components, got shape {arr.shape}")
        arr = arr.reshape(-1)
    else:
        raise ConfigError(f"{name}: unknown kind {kind!r}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name}: values must be finite")
    return arr


@dataclass
class RunConfig:
    experiment: str = "verify"
    edge_length: float = 3.0
    k_s: float = 0.25
    k_b: float = 1.7
    force_spec: dict = field(default_factory=lambda: {"uniform": [0.0, 0.0, -5.3]})
    force_levels: list | None = None
    kappa_list: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    dt: float | None = None
    T: float = 10.0
    initial_displacement: dict = field(default_factory=lambda: {"uniform": [0.0, 0.0, 0.0]})
    initial_velocity: dict = field(default_factory=lambda: {"uniform": [0.0, 0.0, 0.0]})
    scheme: str = "leapfrog"
    output_dir: str = "out"
    stage1_result: str | None = None
    max_samples: int = 10_000

    def __post_init__(self):
        self.validate()

    @property
    def force(self) -> np.ndarray:
        return parse_vertex_field(self.force_spec, "force_spec")

    @property
    def U0(self) -> np.ndarray:
        return parse_vertex_field(self.initial_displacement, "initial_displacement")

    @property
    def U1(self) -> np.ndarray:
        return parse_vertex_field(self.initial_velocity, "initial_velocity")

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        for name in ("edge_length", "k_s", "k_b", "T"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        if self.dt is not None and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise ConfigError(f"dt must be positive or null, got {self.dt!r}")
        if self.experiment in ("dynamics", "sweep"):
            if not self.kappa_list:
                raise ConfigError("kappa_list must be nonempty for dynamics/sweep")
        if any(not (isinstance(k, (int, float)) and k > 0) for k in self.kappa_list):
            raise ConfigError(f"kappa_list entries must be positive, got {self.kappa_list!r}")
        if self.force_levels is not None and (
            not isinstance(self.force_levels, list)
            or not all(isinstance(f, (int, float)) for f in self.force_levels)
        ):
            raise ConfigError("force_levels must be a list of numbers")
        if self.scheme not in ("leapfrog", "euler", "rk4"):
            raise ConfigError(f"scheme must be leapfrog, euler or rk4, got {self.scheme!r}")
        if not isinstance(self.max_samples, int) or self.max_samples < 2:
            raise ConfigError("max_samples must be an integer >= 2")
        # parse eagerly so errors surface at load time
        self.force, self.U0, self.U1

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        from .io import read_json

        return cls.from_dict(read_json(Path(path)))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)
