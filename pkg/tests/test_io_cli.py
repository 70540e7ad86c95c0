import math
import os

import numpy as np
import pytest
import yaml

from nonholomech import io as nio
from nonholomech.cli import main
from nonholomech.config import ConfigError, build_config, parse_override
from nonholomech.se2 import Trajectory
from nonholomech.snake.fields import FieldGrid, GridSpec, exterior_derivative_field


def test_all_masked_grid_file(tmp_path):
    g = FieldGrid((0.0, 1.0, 0.0, 1.0), (2, 2), np.full((2, 2), np.nan), np.ones((2, 2), bool))
    text = nio.emit_field_grid(g, tmp_path / "g.txt").read_text()
    assert text.splitlines() == ["# bounds 0.0 1.0 0.0 1.0", "# resolution 2 2", "nan nan", "nan nan"]


def test_field_grid_roundtrip_bit_exact(tmp_path):
    f = exterior_derivative_field("theta", "int", GridSpec(n1=21, n2=21))
    back = nio.read_field_grid(nio.emit_field_grid(f, tmp_path / "f.txt"))
    assert back.bounds == f.bounds and back.resolution == f.resolution
    assert np.array_equal(back.values, f.values, equal_nan=True)
    assert np.array_equal(back.mask, f.mask)


def test_lateral_field_file_rows_are_zero(tmp_path):
    f = exterior_derivative_field("y", "int", GridSpec(n1=15, n2=15))
    lines = nio.emit_field_grid(f, tmp_path / "y.txt").read_text().splitlines()[2:]
    for line in lines:
        assert all(v in ("nan", "0.0", "-0.0") for v in line.split())


def test_empty_trajectory_is_header_only(tmp_path):
    tr = Trajectory(np.empty(0), np.empty((0, 2)), 0.1, ("a", "b"))
    assert (nio.emit_trajectory_csv(tr, tmp_path / "e.csv")).read_bytes() == b"t,a,b\n"


def test_trajectory_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(3)
    tr = Trajectory(0.1 * np.arange(50), rng.normal(size=(50, 3)) * 10.0 ** rng.integers(-12, 12, (50, 3)), 0.1, ("u", "v", "w"))
    path = nio.emit_trajectory_csv(tr, tmp_path / "t.csv")
    raw = path.read_bytes()
    assert b"\r" not in raw
    back = nio.read_trajectory_csv(path)
    assert np.array_equal(back.states, tr.states) and np.array_equal(back.times, tr.times)
    assert back.columns == tr.columns


def test_trajectory_column_subset(tmp_path):
    tr = Trajectory([0.0, 1.0], [[1, 2, 3], [4, 5, 6]], 1.0, ("a", "b", "c"))
    text = nio.emit_trajectory_csv(tr, tmp_path / "s.csv", ("c", "a")).read_text()
    assert text.splitlines()[0] == "t,c,a"
    with pytest.raises(ValueError):
        nio.emit_trajectory_csv(tr, tmp_path / "bad.csv", ("zz",))


def test_atomic_write_leaves_nothing_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "out.txt"

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        nio.atomic_write_text(target, "data")
    assert list(tmp_path.iterdir()) == []


# ---------------- configuration ----------------

def test_config_defaults_and_echo():
    cfg = build_config(None, "chaplygin-passive")
    assert cfg["numerics"]["t_final"] == 200.0
    assert cfg["init"]["phi"] == math.pi
    again = build_config(cfg.canonical_text())
    assert again.canonical_text() == cfg.canonical_text()


def test_config_unknown_key_reports_line():
    text = "command: chaplygin-sweep\nsweep:\n  n_points: 10\n  bogus: 1\n"
    with pytest.raises(ConfigError) as info:
        build_config(text)
    assert info.value.where == "sweep.bogus" and info.value.line == 4


def test_config_type_error_reports_line():
    with pytest.raises(ConfigError) as info:
        build_config("command: chaplygin-sweep\nsweep:\n  n_points: many\n")
    assert info.value.line == 3


def test_config_malformed_yaml_reports_line():
    with pytest.raises(ConfigError) as info:
        build_config("command: validate\nnumerics: [1, 2\n")
    assert info.value.line is not None


def test_config_rejects_unused_block_and_unknown_command():
    with pytest.raises(ConfigError):
        build_config("command: validate\nsweep: {n_points: 3}\n")
    with pytest.raises(ConfigError):
        build_config("command: fly\n")
    with pytest.raises(ConfigError):
        build_config("numerics: {dt: 0.01}\n")


def test_config_semantic_checks():
    with pytest.raises(ConfigError):
        build_config(None, "chaplygin-sweep", [parse_override("sweep.omega_min=3.0")])
    with pytest.raises(ConfigError):
        build_config(None, "validate", [parse_override("numerics.dt=-1")])


def test_override_parsing():
    assert parse_override("sweep.n_points=50") == (("sweep", "n_points"), 50)
    assert parse_override("headings.omegas=[0.5, 1.2]") == (("headings", "omegas"), [0.5, 1.2])
    with pytest.raises(ConfigError):
        parse_override("nokey")


# ---------------- command line ----------------

def test_unknown_subcommand_exit_2(capsys):
    assert main(["frobnicate"]) == 2
    assert "usage" in capsys.readouterr().err


def test_missing_argument_exit_2():
    assert main([]) == 2


def test_bad_config_file_exit_2(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("command: chaplygin-passive\ninit:\n  theta: nope\n")
    assert main([str(p), "--out", str(tmp_path / "o")]) == 2


def test_validate_defaults_exit_0(tmp_path):
    assert main(["validate", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "validate.txt").read_text()
    assert "FAIL" not in text and text.count("PASS") >= 10


def test_passive_columns_and_echo_rerun(tmp_path):
    out1, out2 = tmp_path / "one", tmp_path / "two"
    assert main(["chaplygin-passive", "--out", str(out1), "--set", "numerics.t_final=2.0"]) == 0
    header = (out1 / "passive.csv").read_text().splitlines()[0]
    assert header == "t,x,y,theta,phi,x_p,y_p,J_LT,J_RW,J_X,J_Y"
    assert main([str(out1 / "config.yaml"), "--out", str(out2)]) == 0
    for name in ("passive.csv", "config.yaml"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_simulation_abort_exit_1(tmp_path, capsys):
    code = main(["snake-gait", "--out", str(tmp_path), "--set", "gait.B2=0.5"])
    assert code == 1
    assert "t =" in capsys.readouterr().err


def test_small_sweep_via_cli(tmp_path):
    args = ["chaplygin-sweep", "--out", str(tmp_path), "--set", "sweep.n_points=4",
            "--set", "numerics.t_final=70", "--set", "sweep.omega_min=0.9"]
    assert main(args) == 0
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0] == "omega,mean_J_LT,converged" and len(rows) == 5
    summary = yaml.safe_load((tmp_path / "summary.yaml").read_text())
    assert summary["rows"] == 4


def test_field_command_writes_grids(tmp_path):
    assert main(["snake-field", "--out", str(tmp_path), "--set", "numerics.grid_resolution=11",
                 "--set", "field.connections=[int]"]) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["config.yaml", "field_int_theta.txt", "field_int_x.txt", "field_int_y.txt"]


def test_output_key_in_config(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(f"command: chaplygin-forced\noutput: {tmp_path / 'dest'}\nnumerics: {{t_final: 1.0}}\n")
    assert main([str(p)]) == 0
    assert (tmp_path / "dest" / "forced.csv").exists()
    assert "output" not in yaml.safe_load((tmp_path / "dest" / "config.yaml").read_text())


def test_multi_and_headings_commands(tmp_path):
    assert main(["chaplygin-multi", "--out", str(tmp_path / "m"), "--set", "numerics.t_final=5"]) == 0
    assert (tmp_path / "m" / "beanie_1.csv").exists()
    assert main(["chaplygin-headings", "--out", str(tmp_path / "h"), "--set", "numerics.t_final=30",
                 "--set", "headings.omegas=[0.0, 1.2]"]) == 0
    assert len((tmp_path / "h" / "headings.csv").read_text().splitlines()) == 3
