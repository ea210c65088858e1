import json

import numpy as np
import pytest

from icocapsid import io
from icocapsid.cli import main
from icocapsid.config import RunConfig, parse_vertex_field
from icocapsid.dynamics import PenaltyProblem, integrate
from icocapsid.errors import ConfigError
from icocapsid.statics import solve_obstacle, uniform_force


def write_config(path, **kw):
    path.write_text(json.dumps(kw))
    return str(path)


# -- file formats -------------------------------------------------------------


def test_obj_round_trip(tmp_path, geom, rng):
    U = rng.normal(size=33)
    io.write_obj(tmp_path / "a.obj", geom, U, comment="two\nlines")
    verts, faces = io.read_obj(tmp_path / "a.obj")
    from icocapsid.geometry import deformed_positions, oriented_faces

    assert np.array_equal(verts, deformed_positions(geom, U)[0])
    assert faces == oriented_faces(geom)


def test_matrix_round_trip(tmp_path, model):
    io.write_matrix(tmp_path / "u.txt", model.upsilon, "Upsilon")
    assert np.array_equal(io.read_matrix(tmp_path / "u.txt"), model.upsilon)


def test_matrix_shape_mismatch(tmp_path):
    (tmp_path / "m.txt").write_text("2 2\n1 2\n")
    with pytest.raises(ValueError):
        io.read_matrix(tmp_path / "m.txt")


def test_trajectory_csv_round_trip(tmp_path, model):
    traj = integrate(PenaltyProblem(model, 1e-2, 1.0, F=uniform_force(-3.0)), 0.01)
    io.write_trajectory_csv(tmp_path / "t.csv", traj)
    cols = io.read_trajectory_csv(tmp_path / "t.csv")
    assert np.array_equal(cols["U"], traj.U)
    assert np.array_equal(cols["V"], traj.V)
    assert np.array_equal(cols["t"], traj.times)
    assert np.array_equal(cols["E_pen"], traj.penalty)
    assert np.array_equal(cols["r_max"], traj.r_max)
    assert len(io.trajectory_header()) == 1 + 66 + 4


def test_trajectory_csv_decimates(tmp_path, model):
    traj = integrate(PenaltyProblem(model, 1e-2, 1.0), 0.001)
    io.write_trajectory_csv(tmp_path / "t.csv", traj, max_samples=20)
    assert len(io.read_trajectory_csv(tmp_path / "t.csv")["t"]) == 20


def test_static_record_round_trip(tmp_path, model):
    res = solve_obstacle(model, uniform_force(-0.8))
    rec = io.static_record(res, kind="static", inputs={}, top_height=1.0)
    io.write_json(tmp_path / "r.json", rec)
    back = io.static_result_from_record(io.read_json(tmp_path / "r.json"))
    assert np.array_equal(back.U, res.U)
    assert back.contact == res.contact
    assert back.residuals == res.residuals
    assert back.iterations == res.iterations


@pytest.mark.parametrize("field", ["U", "active", "multipliers", "iterations", "residuals"])
def test_static_record_missing_field(model, field):
    rec = io.static_record(solve_obstacle(model, uniform_force(-0.8)), kind="static", inputs={}, top_height=1.0)
    rec = json.loads(json.dumps(io._jsonable(rec)))
    del rec[field]
    with pytest.raises(ConfigError, match=field):
        io.static_result_from_record(rec, "stage1.json")


def test_static_record_bad_active(model):
    rec = {"U": [0.0] * 33, "active": [0, 3], "multipliers": [1.0, 1.0], "iterations": 1, "residuals": {}}
    with pytest.raises(ConfigError, match="active"):
        io.static_result_from_record(rec)


def test_read_json_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        io.read_json(tmp_path / "nope.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError, match="invalid JSON"):
        io.read_json(tmp_path / "bad.json")


# -- configuration ------------------------------------------------------------


def test_parse_vertex_field():
    assert np.array_equal(parse_vertex_field({"uniform": [1, 2, 3]}), np.tile([1.0, 2, 3], 11))
    table = np.arange(33.0).reshape(11, 3)
    assert np.array_equal(parse_vertex_field({"table": table.tolist()}), table.reshape(-1))
    for bad in ({"uniform": [1, 2]}, {"table": [[1, 2, 3]]}, {"ramp": [1]}, [1, 2, 3], {"uniform": [0, 0, float("nan")]}):
        with pytest.raises(ConfigError):
            parse_vertex_field(bad)


def test_config_rejects_unknown_and_bad_values():
    with pytest.raises(ConfigError, match="kappa"):
        RunConfig.from_dict({"experiment": "static", "kappa": 1})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"experiment": "static", "k_s": -1})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"experiment": "sweep", "kappa_list": []})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"experiment": "static", "scheme": "magic"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"experiment": "nonsense"})


def test_config_dict_round_trip():
    cfg = RunConfig(experiment="dynamics", T=2.5, kappa_list=[1e-3])
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


# -- command line -------------------------------------------------------------


def test_cli_geometry(tmp_path):
    assert main(["geometry", "--out", str(tmp_path), "--matrices"]) == 0
    data = io.read_json(tmp_path / "geometry.json")
    assert len(data["edges"]) == 30
    assert abs(sum(data["angular_defects"]) - 4 * np.pi) <= 1e-10
    assert io.read_matrix(tmp_path / "upsilon.txt").shape == (33, 33)
    assert io.read_matrix(tmp_path / "theta.txt").shape == (30, 33)


def test_cli_static_zero_force(tmp_path):
    cfg = write_config(tmp_path / "c.json", experiment="static", force_spec={"uniform": [0, 0, 0]})
    assert main(["static", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert (tmp_path / "deformed.obj").read_bytes() == (tmp_path / "reference.obj").read_bytes()
    assert io.read_json(tmp_path / "result.json")["active"] == []


def test_cli_static_sweep_and_equilibrium(tmp_path):
    cfg = write_config(tmp_path / "c.json", experiment="static", force_levels=[-5.3, -5.7, -6.0, -7.0])
    assert main(["static", "--config", cfg, "--out", str(tmp_path)]) == 0
    summary = io.read_json(tmp_path / "summary.json")["levels"]
    heights = [lvl["top_height"] for lvl in summary]
    assert all(b <= a for a, b in zip(heights, heights[1:]))

    outs = []
    for k in (0, 1):
        out = tmp_path / f"eq{k}"
        stage1 = tmp_path / f"level_{k:02d}" / "result.json"
        assert main(["equilibrium", "--stage1", str(stage1), "--out", str(out)]) == 0
        outs.append(io.read_json(out / "result.json"))
        assert outs[-1]["min_gap"] >= -1e-12
    assert np.abs(np.subtract(outs[0]["U"], outs[1]["U"])).max() <= 1e-12


def test_cli_equilibrium_from_empty_contact(tmp_path):
    cfg = write_config(tmp_path / "c.json", experiment="static", force_spec={"uniform": [0, 0, 0.5]})
    assert main(["static", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert main(["equilibrium", "--out", str(tmp_path)]) == 0
    assert io.read_json(tmp_path / "result.json")["U"] == [0.0] * 33


def test_cli_equilibrium_names_missing_field(tmp_path, capsys):
    (tmp_path / "s1.json").write_text(json.dumps({"U": [0.0] * 33, "multipliers": []}))
    assert main(["equilibrium", "--stage1", str(tmp_path / "s1.json"), "--out", str(tmp_path)]) == 2
    assert "'active'" in capsys.readouterr().err


def test_cli_equilibrium_missing_file(tmp_path, capsys):
    assert main(["equilibrium", "--stage1", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2
    assert "not found" in capsys.readouterr().err


def test_cli_dynamics(tmp_path):
    cfg = write_config(tmp_path / "c.json", experiment="dynamics", T=1.0, kappa_list=[1e-2],
                       force_spec={"uniform": [0, 0, -3]}, max_samples=10)
    assert main(["dynamics", "--config", cfg, "--out", str(tmp_path)]) == 0
    summary = io.read_json(tmp_path / "summary.json")
    assert summary["status"] == "ok" and summary["gronwall_excess"] <= 0
    assert len(io.read_trajectory_csv(tmp_path / "trajectory.csv")["t"]) == 10


def test_cli_dynamics_unstable(tmp_path):
    cfg = write_config(tmp_path / "c.json", experiment="dynamics", T=10.0, kappa_list=[1e-4], dt=0.5,
                       force_spec={"uniform": [0, 0, -1]})
    assert main(["dynamics", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert io.read_json(tmp_path / "summary.json")["status"] == "failed"


def test_cli_sweep(tmp_path):
    cfg = write_config(tmp_path / "c.json", experiment="sweep", T=3.0, force_spec={"uniform": [0, 0, -1]})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = io.read_json(tmp_path / "sweep.json")
    assert len(rep["runs"]) == 4
    assert all((tmp_path / r["csv"]).exists() for r in rep["runs"])


def test_cli_verify(tmp_path):
    assert main(["verify", "--out", str(tmp_path), "--seed", "3"]) == 0
    rep = io.read_json(tmp_path / "verify.json")
    assert rep["passed"] and rep["seed"] == 3
    names = {c["name"] for c in rep["checks"]}
    assert {"descartes_sum_minus_4pi", "stretch_min_eigenvalue", "pdas_vs_oracle"} <= names


def test_cli_rejects_unknown_key(tmp_path):
    cfg = write_config(tmp_path / "c.json", experiment="static", forse_spec={})
    assert main(["static", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_cli_rejects_mismatched_experiment(tmp_path):
    cfg = write_config(tmp_path / "c.json", experiment="sweep")
    assert main(["static", "--config", cfg, "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("argv", [
    ["geometry", "--matrices"],
    ["static"],
    ["verify", "--seed", "5"],
])
def test_outputs_are_deterministic(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([*argv, "--out", str(a)]) == main([*argv, "--out", str(b)])
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_dynamics_outputs_are_deterministic(tmp_path):
    cfg = write_config(tmp_path / "c.json", experiment="dynamics", T=1.0, kappa_list=[1e-3],
                       force_spec={"uniform": [0, 0, -3]})
    for d in ("a", "b"):
        assert main(["dynamics", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    for name in ("trajectory.csv", "final.obj", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
