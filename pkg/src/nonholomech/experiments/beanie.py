"""Frequency sweeps, heading analysis and multi-beanie runs on an actuated platform."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..chaplygin.model import BeanieFullState, BeanieParams
from ..chaplygin.simulate import BodyFrameControl, integrate_forced, simulate_forced_many, trailing_mean
from ..se2 import DEFAULT_DT, Trajectory, n_steps_for

METRIC_PERIODS = 3
TRANSIENT_FRACTION = 0.3
DRIFT_LIMIT = 0.05


@dataclass(frozen=True)
class SweepSpec:
    omega_min: float = 0.3
    omega_max: float = 2.0
    n_points: int = 100
    A: float = 1.0
    t_final: float = 150.0
    params: BeanieParams = field(default_factory=BeanieParams)
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if not 0 < self.omega_min < self.omega_max:
            raise ValueError("need 0 < omega_min < omega_max")
        if self.n_points < 2:
            raise ValueError("n_points must be at least 2")
        if self.t_final < METRIC_PERIODS * 2 * math.pi / self.omega_min:
            raise ValueError("t_final shorter than the metric window at omega_min")

    def omegas(self) -> np.ndarray:
        # k/(N-1) is formed first so refined sweeps reproduce the coarse nodes bit for bit
        k = np.arange(self.n_points)
        return self.omega_min + (self.omega_max - self.omega_min) * (k / (self.n_points - 1))


@dataclass(frozen=True)
class SweepResult:
    omega: np.ndarray
    mean_J_LT: np.ndarray
    converged: np.ndarray

    def __post_init__(self):
        if not (len(self.omega) == len(self.mean_J_LT) == len(self.converged)):
            raise ValueError("ragged sweep result")
        if np.any(np.diff(self.omega) <= 0):
            raise ValueError("omegas must be strictly increasing")

    def rows(self):
        return list(zip(self.omega.tolist(), self.mean_J_LT.tolist(), self.converged.tolist()))

    def band_statistics(self, lo: float, hi: float) -> dict:
        ok = self.converged
        inb = ok & (self.omega >= lo) & (self.omega <= hi)
        outb = ok & ~((self.omega >= lo) & (self.omega <= hi))
        return {
            "in_band_mean": float(np.mean(self.mean_J_LT[inb])) if inb.any() else float("nan"),
            "out_band_mean": float(np.mean(self.mean_J_LT[outb])) if outb.any() else float("nan"),
            "in_band_max": float(np.max(self.mean_J_LT[inb])) if inb.any() else float("nan"),
            "out_band_max": float(np.max(self.mean_J_LT[outb])) if outb.any() else float("nan"),
        }


def _sweep_rows(params: BeanieParams, A: float, omegas: np.ndarray, dt: float, t_final: float):
    """Integrate one batch of sweep rows; returns (metric, converged) arrays."""
    n = len(omegas)
    steps = n_steps_for(dt, t_final)
    windows = METRIC_PERIODS * 2.0 * math.pi / omegas
    first = max(0, int(math.floor((t_final - windows.max()) / dt)) - 2)
    hist = np.empty((steps + 1 - first, n))
    m = params.m

    def keep(i, t, Y):
        if i >= first:
            th = Y[:, 2]
            X = Y[:, 6] + Y[:, 10]
            Yv = Y[:, 7] + Y[:, 11]
            hist[i - first] = m * (X * np.cos(th) + Yv * np.sin(th))

    final = integrate_forced([params] * n, np.zeros((n, 12)), BodyFrameControl(A, omegas), dt, t_final, keep)
    times = dt * np.arange(steps + 1)[first:]
    ok = np.all(np.isfinite(final), axis=1) & np.all(np.isfinite(hist), axis=0)
    metric = np.array([trailing_mean(times, hist[:, j], windows[j]) if ok[j] else np.nan for j in range(n)])
    return metric, ok


def worker_count() -> int:
    raw = os.environ.get("NONHOLOMECH_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"NONHOLOMECH_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("NONHOLOMECH_THREADS must be non-negative")
    return n or (os.cpu_count() or 1)


def run_frequency_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Mean forward momentum over the final three periods at each actuation frequency.

    Rows are independent; a row that diverges is flagged and the rest carry on.
    """
    omegas = spec.omegas()
    workers = workers or worker_count()
    chunks = [c for c in np.array_split(omegas, min(workers, len(omegas))) if len(c)]
    if len(chunks) == 1:
        parts = [_sweep_rows(spec.params, spec.A, omegas, spec.dt, spec.t_final)]
    else:
        with ProcessPoolExecutor(max_workers=len(chunks)) as ex:
            futs = [ex.submit(_sweep_rows, spec.params, spec.A, c, spec.dt, spec.t_final) for c in chunks]
            parts = [f.result() for f in futs]
    metric = np.concatenate([p[0] for p in parts])
    ok = np.concatenate([p[1] for p in parts])
    return SweepResult(omegas, metric, ok)


@dataclass(frozen=True)
class HeadingTrace:
    omega: float
    trajectory: Trajectory
    drift_per_period: float
    classification: str


def classify_heading(times: np.ndarray, theta: np.ndarray, omega: float,
                     transient: float = TRANSIENT_FRACTION, limit: float = DRIFT_LIMIT) -> tuple[float, str]:
    """Largest change between consecutive per-period heading means after the transient."""
    t = np.asarray(times)
    th = np.asarray(theta)
    sel = t >= t[0] + transient * (t[-1] - t[0])
    t, th = t[sel], th[sel]
    if omega <= 0:
        drift = float(np.ptp(th))
    else:
        period = 2.0 * math.pi / omega
        idx = np.floor((t - t[0]) / period).astype(int)
        full = int((t[-1] - t[0]) // period)
        means = np.array([th[idx == k].mean() for k in range(full)])
        drift = float(np.max(np.abs(np.diff(means)))) if len(means) > 1 else float("inf")
    return drift, ("stable_oscillatory" if drift < limit else "complex")


def run_heading_analysis(params: BeanieParams, omegas, A: float = 1.0, t_final: float = 200.0,
                         dt: float = DEFAULT_DT) -> list[HeadingTrace]:
    omegas = np.asarray(list(omegas), dtype=float)
    n = len(omegas)
    trajs = simulate_forced_many([params] * n, [BeanieFullState()] * n, BodyFrameControl(A, omegas), dt, t_final)
    out = []
    for w, tr in zip(omegas, trajs):
        drift, label = classify_heading(tr.times, tr.column("theta"), float(w))
        out.append(HeadingTrace(float(w), tr, drift, label))
    return out


MULTI_OMEGA = 0.9


def run_multi_beanie(params_list, targeted_index: int, A: float = 1.0, omega: float = MULTI_OMEGA,
                     dt: float = DEFAULT_DT, t_final: float = 100.0, inits=None) -> list[Trajectory]:
    """All beanies ride one platform whose motion follows the targeted beanie's heading."""
    n = len(params_list)
    if not 0 <= targeted_index < n:
        raise ValueError("targeted_index out of range")
    if n == 0:
        raise ValueError("need at least one beanie")
    inits = list(inits) if inits is not None else [BeanieFullState()] * n
    if len(inits) != n:
        raise ValueError("one initial state per beanie is required")
    base = inits[0]
    if any((s.x_p, s.y_p, s.x_pd, s.y_pd) != (base.x_p, base.y_p, base.x_pd, base.y_pd) for s in inits):
        raise ValueError("all beanies share one platform; its initial state must agree")
    control = BodyFrameControl(A, omega, target=targeted_index)
    return simulate_forced_many(list(params_list), inits, control, dt, t_final)
