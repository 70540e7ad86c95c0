"""Canned snake-on-platform scenarios with self-checking summary reports."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..io import emit_trajectory_csv, read_trajectory_csv
from ..se2 import DEFAULT_DT, GroupElementSE2, Trajectory, fit_first_harmonic
from ..snake.kinematics import Gait, SnakeParams
from ..snake.reduction import reduce_theta
from ..snake.simulate import (
    constraint_residuals,
    linear_momentum,
    per_cycle,
    simulate_snake_joint_driven,
    simulate_snake_platform_driven,
)

SCENARIOS = ("a", "b", "c", "d")


@dataclass(frozen=True)
class GaitConfig:
    B1: float = 0.8
    B2: float = 0.8
    phi: float = -math.pi / 2
    omega: float = 1.0
    c1: float = 0.0
    c2: float = 0.0

    def gait(self) -> Gait:
        return Gait(self.B1, self.B2, self.phi, self.omega, self.c1, self.c2)


@dataclass(frozen=True)
class PlatformInputConfig:
    """Body-frame platform velocity u = U sin(wt), v = V sin(wt - lag(t)), lag(t) = lag0 + rate t."""

    U: float = 0.003
    V: float = 0.003
    omega: float = 2.0
    lag0: float = math.pi / 2
    lag_rate: float = 0.0
    alpha1_0: float = 1.2
    alpha2_0: float = 0.0

    def source(self) -> Callable[[float], tuple[float, float]]:
        U, V, w, l0, rate = self.U, self.V, self.omega, self.lag0, self.lag_rate
        return lambda t: (U * math.sin(w * t), V * math.sin(w * t - (l0 + rate * t)))


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "a"
    params: SnakeParams = field(default_factory=SnakeParams)
    gait: GaitConfig = field(default_factory=GaitConfig)
    platform: PlatformInputConfig = field(default_factory=PlatformInputConfig)
    cycles: int = 3
    t_final: float | None = None
    theta_center: float = 7 * math.pi / 12
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.cycles < 1:
            raise ValueError("cycles must be at least 1")


def default_config(scenario: str) -> ScenarioConfig:
    """Documented defaults; the amplitudes and offsets are our choices."""
    if scenario == "a":
        return ScenarioConfig("a", gait=GaitConfig(0.8, 0.8, -math.pi / 2, 1.0), cycles=3)
    if scenario == "b":
        return ScenarioConfig("b", platform=PlatformInputConfig(lag0=math.pi / 2, lag_rate=0.0), cycles=10)
    if scenario == "c":
        return ScenarioConfig("c", platform=PlatformInputConfig(lag0=math.pi / 2, lag_rate=math.pi / 200), t_final=200.0)
    if scenario == "d":
        return ScenarioConfig("d", gait=GaitConfig(0.37, 0.37, -math.pi / 2, 1.0), cycles=2)
    raise ValueError(f"unknown scenario {scenario!r}")


@dataclass(frozen=True)
class ScenarioReport:
    scenario: str
    config: dict
    files: dict
    summary: dict


def aligned_dt(period: float, dt: float) -> float:
    """Largest step not above dt that divides the period exactly into whole steps."""
    return period / math.ceil(period / dt - 1e-9)


def _run_trajectory(cfg: ScenarioConfig) -> Trajectory:
    if cfg.scenario in ("a", "d"):
        gait = cfg.gait.gait()
        dt = aligned_dt(gait.period, cfg.dt)
        theta0 = 0.0
        if cfg.scenario == "d":
            probe = simulate_snake_joint_driven(GroupElementSE2(), (0.0, 0.0), gait, cfg.params, dt, gait.period)
            fit = fit_first_harmonic(probe.times, probe.column("theta"), gait.omega)
            theta0 = cfg.theta_center - fit.C
        return simulate_snake_joint_driven(
            GroupElementSE2(0.0, 0.0, theta0), (0.0, 0.0), gait, cfg.params, dt, cfg.cycles * gait.period
        )
    pin = cfg.platform
    period = 2 * math.pi / pin.omega
    dt = aligned_dt(period, cfg.dt)
    t_final = cfg.t_final if cfg.t_final is not None else cfg.cycles * period
    return simulate_snake_platform_driven(
        (pin.alpha1_0, pin.alpha2_0), 0.0, pin.source(), cfg.params, dt, t_final
    )


def _common(traj: Trajectory, params: SnakeParams) -> dict:
    return {
        "max_wheel_residual": float(np.abs(constraint_residuals(traj, params)).max()),
        "max_linear_momentum": float(np.abs(linear_momentum(traj, params)).max()),
    }


def curvature_per_cycle(traj: Trajectory, period: float) -> tuple[np.ndarray, np.ndarray]:
    """Signed curvature (net turn over path length) of the robot's platform-relative path per cycle."""
    n = int(round(period / traj.dt))
    x, y, th = traj.column("x"), traj.column("y"), traj.column("theta")
    seg = np.hypot(np.diff(x), np.diff(y))
    starts, kappa = [], []
    for k in range(0, len(traj) - n, n):
        length = float(seg[k:k + n].sum())
        kappa.append((th[k + n] - th[k]) / length if length > 0 else 0.0)
        starts.append(traj.times[k])
    return np.array(starts), np.array(kappa)


def sign_changes(values: np.ndarray) -> list[int]:
    s = np.sign(values)
    s = s[s != 0]
    return [int(i) for i in np.nonzero(s[1:] != s[:-1])[0]]


def summarize(traj: Trajectory, cfg: ScenarioConfig) -> dict:
    """Summary scalars; a pure function of the trajectory and config."""
    out = _common(traj, cfg.params)
    if cfg.scenario in ("a", "d"):
        gait = cfg.gait.gait()
        cyc = per_cycle(traj, gait.period)
        out["dtheta_per_cycle"] = [c["dtheta"] for c in cyc]
        out["dx_body_per_cycle"] = [c["dx_body"] for c in cyc]
        out["dy_body_per_cycle"] = [c["dy_body"] for c in cyc]
        out["platform_dx_per_cycle"] = [c["dx_p"] for c in cyc]
        out["platform_dy_per_cycle"] = [c["dy_p"] for c in cyc]
        if cfg.scenario == "d":
            th = traj.column("theta")
            fit = fit_first_harmonic(traj.times, th, gait.omega)
            red = reduce_theta(gait, fit, cfg.params, traj.times, th)
            b = gait.shape(traj.times)
            pred = red.displacement(gait, int(round(gait.period / traj.dt)))
            full = np.array([cyc[-1]["dx_p"], cyc[-1]["dy_p"]])
            out.update({
                "Theta": fit.Theta, "psi": fit.psi, "C": fit.C, "a1": red.a1, "a2": red.a2,
                "theta_min": float(th.min()), "theta_max": float(th.max()),
                "theta_residual": float(np.abs(red.theta_of(b[0], b[1]) - th).max()),
                "predicted_platform_dx": float(pred[0]), "predicted_platform_dy": float(pred[1]),
                "relative_error": float(np.linalg.norm(pred - full) / np.linalg.norm(full)),
            })
        return out
    pin = cfg.platform
    period = 2 * math.pi / pin.omega
    cyc = per_cycle(traj, period)
    a1, a2 = traj.column("alpha1"), traj.column("alpha2")
    n = int(round(period / traj.dt))
    out["dtheta_per_cycle"] = [c["dtheta"] for c in cyc]
    out["shape_center_per_cycle"] = [[float(a1[k:k + n].mean()), float(a2[k:k + n].mean())] for k in range(0, len(traj) - n, n)]
    out["net_displacement"] = [float(traj.column("x")[-1] - traj.column("x")[0]), float(traj.column("y")[-1] - traj.column("y")[0])]
    if cfg.scenario == "b":
        out["shape_return_error"] = float(np.hypot(a1[n] - a1[0], a2[n] - a2[0]))
    if cfg.scenario == "c":
        starts, kappa = curvature_per_cycle(traj, period)
        flips = sign_changes(kappa)
        out["curvature_per_cycle"] = kappa.tolist()
        out["curvature_sign_changes"] = len(flips)
        out["curvature_flip_times"] = [float(starts[i + 1]) for i in flips]
        out["curvature_first"] = float(kappa[0])
        out["curvature_last"] = float(kappa[-1])
    return out


def config_dict(cfg: ScenarioConfig) -> dict:
    return asdict(cfg)


def run_snake_scenarios(scenario: str, config: ScenarioConfig | None = None, out_dir=None) -> ScenarioReport:
    """Run one canned scenario; with out_dir, write the trajectory and verify the summary from the file."""
    cfg = config or default_config(scenario)
    if cfg.scenario != scenario:
        raise ValueError("config belongs to a different scenario")
    traj = _run_trajectory(cfg)
    summary = summarize(traj, cfg)
    files = {}
    if out_dir is not None:
        path = Path(out_dir) / f"snake_{scenario}_trajectory.csv"
        emit_trajectory_csv(traj, path)
        files["trajectory"] = path.name
        again = summarize(read_trajectory_csv(path), cfg)
        if again != summary:
            raise RuntimeError("summary recomputed from the written trajectory does not match")
    return ScenarioReport(scenario, config_dict(cfg), files, summary)
