"""Command-line front end: `nonholomech CONFIG.yaml [--out DIR] [--set key=value ...]`.

CONFIG may also be a bare command name, which runs that command on its defaults.
Exit codes: 0 success, 1 simulation or validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from .chaplygin.model import BeanieFullState, BeanieParams
from .chaplygin.simulate import BodyFrameControl, simulate_forced, simulate_passive
from .config import COMMANDS, ConfigError, RunConfig, build_config, parse_override
from .experiments.beanie import SweepSpec, run_frequency_sweep, run_heading_analysis, run_multi_beanie
from .experiments.snake import GaitConfig, PlatformInputConfig, ScenarioConfig, run_snake_scenarios
from .io import atomic_write_text, emit_field_grid, emit_trajectory_csv, table_text
from .se2 import IntegrationError
from .snake.fields import ROWS, GridSpec, exterior_derivative_field
from .snake.kinematics import SnakeParams
from .validation import run_invariant_suite

PASSIVE_CSV_COLUMNS = ("x", "y", "theta", "phi", "x_p", "y_p", "J_LT", "J_RW", "J_X", "J_Y")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nonholomech",
        description="Batch simulations of a wheeled snake and a Chaplygin beanie on movable platforms.",
        epilog="commands: " + ", ".join(COMMANDS),
    )
    p.add_argument("config", help="YAML run configuration, or a command name to run on defaults")
    p.add_argument("--out", help="output directory (overrides the config's `output`)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key, e.g. --set sweep.n_points=50 (repeatable)")
    return p


def _write_yaml(path: Path, data) -> None:
    atomic_write_text(path, yaml.safe_dump(data, sort_keys=True, default_flow_style=False))


def _t_final(cfg: RunConfig) -> float:
    return cfg["numerics"]["t_final"]


def _snake_params(cfg: RunConfig) -> SnakeParams:
    return SnakeParams(**cfg["snake"])


def _beanie_params(cfg: RunConfig) -> BeanieParams:
    return BeanieParams(**cfg["beanie"])


def cmd_snake_field(cfg: RunConfig, out: Path) -> int:
    n = cfg["numerics"]["grid_resolution"]
    grid = GridSpec(*cfg["numerics"]["grid_bounds"], n, n)
    params = _snake_params(cfg)
    for conn in cfg["field"]["connections"]:
        for row in ROWS[conn]:
            field = exterior_derivative_field(row, conn, grid, params, theta=cfg["field"]["theta"])
            path = emit_field_grid(field, out / f"field_{conn}_{row}.txt")
            print(f"{path.name}: {int(field.mask.sum())} masked nodes")
    return 0


def _scenario(cfg: RunConfig, sid: str) -> ScenarioConfig:
    kw = dict(params=_snake_params(cfg), cycles=cfg["scenario"]["cycles"],
              theta_center=cfg["scenario"]["theta_center"], dt=cfg["numerics"]["dt"])
    if "gait" in cfg.blocks:
        kw["gait"] = GaitConfig(**cfg["gait"])
    if "platform_input" in cfg.blocks:
        kw["platform"] = PlatformInputConfig(**cfg["platform_input"])
        kw["t_final"] = _t_final(cfg)
    return ScenarioConfig(sid, **kw)


def _run_scenario(cfg: RunConfig, out: Path, sid: str) -> int:
    scen = _scenario(cfg, sid)
    report = run_snake_scenarios(sid, scen, out)
    _write_yaml(out / "report.yaml", {"scenario": report.scenario, "files": report.files, "summary": report.summary})
    s = report.summary
    print(f"scenario {sid}: max wheel residual {s['max_wheel_residual']:.3e}, "
          f"max linear momentum {s['max_linear_momentum']:.3e}")
    if sid == "c":
        print(f"curvature sign changes: {s['curvature_sign_changes']} at t = {s['curvature_flip_times']}")
    if sid == "d":
        print(f"reduced connection a1={s['a1']:.6f} a2={s['a2']:.6f}, relative displacement error {s['relative_error']:.3e}")
    return 0 if s["max_wheel_residual"] < cfg["numerics"]["tolerance"] else 1


def cmd_snake_gait(cfg, out):
    return _run_scenario(cfg, out, "a")


def cmd_snake_platform(cfg, out):
    return _run_scenario(cfg, out, "c" if cfg["platform_input"]["lag_rate"] != 0 else "b")


def cmd_snake_reduce_theta(cfg, out):
    return _run_scenario(cfg, out, "d")


def cmd_chaplygin_passive(cfg, out):
    traj = simulate_passive(_beanie_params(cfg), BeanieFullState(**cfg["init"]), cfg["numerics"]["dt"], _t_final(cfg))
    emit_trajectory_csv(traj, out / "passive.csv", PASSIVE_CSV_COLUMNS)
    last = traj.states[-1]
    print("final " + ", ".join(f"{c}={last[traj.columns.index(c)]:.6g}" for c in ("J_LT", "J_RW", "J_X", "J_Y", "phi")))
    return 0


def cmd_chaplygin_forced(cfg, out):
    c = cfg["control"]
    motion = None if c["free_platform"] else BodyFrameControl(c["A"], c["omega"])
    traj = simulate_forced(_beanie_params(cfg), BeanieFullState(**cfg["init"]), motion, cfg["numerics"]["dt"], _t_final(cfg))
    emit_trajectory_csv(traj, out / "forced.csv")
    slip = float(np.abs(traj.column("slip")).max())
    print(f"max no-slip residual {slip:.3e}")
    return 0 if slip < cfg["numerics"]["tolerance"] else 1


def cmd_chaplygin_sweep(cfg, out):
    s = cfg["sweep"]
    spec = SweepSpec(s["omega_min"], s["omega_max"], s["n_points"], s["A"], _t_final(cfg),
                     _beanie_params(cfg), cfg["numerics"]["dt"])
    res = run_frequency_sweep(spec)
    atomic_write_text(out / "sweep.csv", table_text(("omega", "mean_J_LT", "converged"), res.rows()))
    p = spec.params
    lo, hi = math.sqrt(p.k / p.B), math.sqrt(p.k * (p.B + p.C) / (p.B * p.C))
    stats = res.band_statistics(lo, hi)
    _write_yaml(out / "summary.yaml", {"band": [lo, hi], **stats, "rows": len(res.omega),
                                       "failed_rows": int((~res.converged).sum())})
    print(f"{len(res.omega)} rows; in-band mean {stats['in_band_mean']:.4g}, out-of-band mean {stats['out_band_mean']:.4g}")
    return 0 if res.converged.all() else 1


def cmd_chaplygin_headings(cfg, out):
    h = cfg["headings"]
    traces = run_heading_analysis(_beanie_params(cfg), h["omegas"], h["A"], _t_final(cfg), cfg["numerics"]["dt"])
    rows = []
    for k, tr in enumerate(traces):
        name = f"heading_{k:02d}.csv"
        emit_trajectory_csv(tr.trajectory, out / name, ("theta",))
        rows.append((tr.omega, tr.drift_per_period, tr.classification, name))
        print(f"omega={tr.omega:g}: {tr.classification} (drift {tr.drift_per_period:.3g} rad per period)")
    atomic_write_text(out / "headings.csv", table_text(("omega", "drift_per_period", "classification", "file"), rows))
    return 0


def cmd_chaplygin_multi(cfg, out):
    m = cfg["multi"]
    inits = [BeanieFullState(**b) for b in m["beanies"]]
    params = [_beanie_params(cfg)] * len(inits)
    trajs = run_multi_beanie(params, m["targeted_index"], m["A"], m["omega"], cfg["numerics"]["dt"], _t_final(cfg), inits)
    rows = []
    for k, tr in enumerate(trajs):
        X = tr.column("x") + tr.column("x_p")
        Y = tr.column("y") + tr.column("y_p")
        dist = float(np.hypot(X - X[0], Y - Y[0]).max())
        name = f"beanie_{k}.csv"
        emit_trajectory_csv(tr, out / name)
        rows.append((k, k == m["targeted_index"], dist, name))
        print(f"beanie {k}{' (targeted)' if k == m['targeted_index'] else ''}: max distance from start {dist:.4g}")
    atomic_write_text(out / "multi.csv", table_text(("beanie", "targeted", "max_distance", "file"), rows))
    return 0


def cmd_validate(cfg, out):
    n = cfg["numerics"]["grid_resolution"]
    lines: list[str] = []

    def log(line):
        print(line)
        lines.append(line)

    results = run_invariant_suite(_snake_params(cfg), _beanie_params(cfg), GridSpec(*cfg["numerics"]["grid_bounds"], n, n),
                                  cfg["numerics"]["tolerance"], log)
    atomic_write_text(out / "validate.txt", "\n".join(lines) + "\n")
    return 0 if all(r.passed for r in results) else 1


HANDLERS = {
    "snake-field": cmd_snake_field,
    "snake-gait": cmd_snake_gait,
    "snake-platform": cmd_snake_platform,
    "snake-reduce-theta": cmd_snake_reduce_theta,
    "chaplygin-passive": cmd_chaplygin_passive,
    "chaplygin-forced": cmd_chaplygin_forced,
    "chaplygin-sweep": cmd_chaplygin_sweep,
    "chaplygin-headings": cmd_chaplygin_headings,
    "chaplygin-multi": cmd_chaplygin_multi,
    "validate": cmd_validate,
}


def load(target: str, overrides) -> RunConfig:
    ov = [parse_override(o) for o in overrides]
    if target in COMMANDS:
        return build_config(None, target, ov)
    path = Path(target)
    if not path.is_file():
        raise ConfigError(f"not a command or a readable config file: {target!r}", "config")
    return build_config(path.read_text(), None, ov)


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load(args.config, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        if args.config not in COMMANDS and not Path(args.config).is_file():
            parser.print_usage(sys.stderr)
        return 2
    out = Path(args.out or cfg.output or f"nonholomech-out/{cfg.command}")
    try:
        atomic_write_text(out / "config.yaml", cfg.canonical_text())
        return HANDLERS[cfg.command](cfg, out)
    except IntegrationError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"invalid setup: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
