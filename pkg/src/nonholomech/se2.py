"""Planar rigid-motion primitives, fixed-step RK4 and first-harmonic fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DEFAULT_DT = 1e-3


class IntegrationError(RuntimeError):
    """Raised when an integration produces non-finite values or cannot continue."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t = {time:.6g} s)")
        self.time = time


def wrap_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    w = math.remainder(theta, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


@dataclass(frozen=True)
class GroupElementSE2:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def normalize(self) -> "GroupElementSE2":
        return GroupElementSE2(self.x, self.y, wrap_angle(self.theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    @classmethod
    def from_array(cls, v: Sequence[float]) -> "GroupElementSE2":
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def compose(self, other: "GroupElementSE2") -> "GroupElementSE2":
        """Group product self * other."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return GroupElementSE2(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )

    def __matmul__(self, other: "GroupElementSE2") -> "GroupElementSE2":
        return self.compose(other)

    def inverse(self) -> "GroupElementSE2":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return GroupElementSE2(-c * self.x - s * self.y, s * self.x - c * self.y, -self.theta)

    def distance(self, other: "GroupElementSE2") -> float:
        """Euclidean distance with the heading difference wrapped."""
        dth = wrap_angle(self.theta - other.theta)
        return math.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2 + dth**2)


@dataclass(frozen=True)
class BodyVelocity:
    xi_x: float = 0.0
    xi_y: float = 0.0
    xi_theta: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.xi_x, self.xi_y, self.xi_theta)):
            raise ValueError(f"non-finite body velocity {self!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.xi_x, self.xi_y, self.xi_theta])


@dataclass(frozen=True)
class FirstHarmonicFit:
    Theta: float
    psi: float
    C: float
    omega: float

    def __post_init__(self):
        if self.Theta < 0:
            raise ValueError("Theta must be non-negative")
        if not -math.pi < self.psi <= math.pi:
            raise ValueError("psi must lie in (-pi, pi]")

    def __call__(self, t):
        return self.Theta * np.cos(self.omega * np.asarray(t) - self.psi) + self.C


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled states; `columns` names the state components."""

    times: np.ndarray
    states: np.ndarray
    dt: float
    columns: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        states = np.array(self.states, dtype=float)
        if states.ndim == 1:
            states = states.reshape(len(times), -1) if len(times) else states.reshape(0, 0)
        if len(times) != len(states):
            raise ValueError("times and states differ in length")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if len(times) > 1:
            steps = np.diff(times)
            if np.any(steps <= 0) or np.max(np.abs(steps - self.dt)) > 1e-9 * max(1.0, abs(times[-1])):
                raise ValueError("times must be strictly increasing with uniform spacing dt")
        if self.columns and states.size and states.shape[1] != len(self.columns):
            raise ValueError("column schema does not match state dimension")
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "columns", tuple(self.columns))

    def __len__(self) -> int:
        return len(self.times)

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.columns.index(name)]

    def poses(self) -> list[GroupElementSE2]:
        """Interpret the first three columns as (x, y, theta)."""
        return [GroupElementSE2.from_array(s[:3]) for s in self.states]


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], state: np.ndarray, t: float, dt: float) -> np.ndarray:
    """Classical fourth-order Runge-Kutta update for y' = f(t, y)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    y = np.asarray(state, dtype=float)
    k1 = np.asarray(f(t, y))
    k2 = np.asarray(f(t + 0.5 * dt, y + 0.5 * dt * k1))
    k3 = np.asarray(f(t + 0.5 * dt, y + 0.5 * dt * k2))
    k4 = np.asarray(f(t + dt, y + dt * k3))
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite state derivative", t)
    return out


def n_steps_for(dt: float, t_final: float) -> int:
    """Number of fixed steps used to cover [0, t_final]; the last sample sits at n*dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_final < dt * (1 - 1e-12):
        raise ValueError("t_final must be at least dt")
    return max(1, int(round(t_final / dt)))


def integrate(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0: Sequence[float],
    dt: float,
    t_final: float,
    t0: float = 0.0,
    post_step: Callable[[float, np.ndarray], np.ndarray] | None = None,
    columns: Sequence[str] = (),
) -> Trajectory:
    """Fixed-step RK4 from t0 over t_final seconds.

    `post_step(t, y)` may return a corrected state (e.g. a constraint projection).
    """
    n = n_steps_for(dt, t_final)
    y = np.asarray(y0, dtype=float).copy()
    out = np.empty((n + 1, y.size))
    out[0] = y
    for i in range(n):
        t = t0 + i * dt
        y = rk4_step(f, y, t, dt)
        if post_step is not None:
            y = post_step(t + dt, y)
        out[i + 1] = y
    times = t0 + dt * np.arange(n + 1)
    return Trajectory(times, out, dt, tuple(columns))


def left_lift(g: GroupElementSE2 | float) -> np.ndarray:
    """Matrix mapping a body velocity to the world-frame rate of (x, y, theta)."""
    theta = g.theta if isinstance(g, GroupElementSE2) else float(g)
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _as_body_array(xi) -> np.ndarray:
    if isinstance(xi, BodyVelocity):
        return xi.as_array()
    return np.asarray(xi, dtype=float)


def reconstruct(
    g0: GroupElementSE2,
    xi_of_t: Callable[[float], BodyVelocity | Sequence[float]],
    dt: float = DEFAULT_DT,
    t_final: float = 1.0,
) -> Trajectory:
    """Integrate g' = T_e L_g xi(t) from g0; columns x, y, theta (theta unwrapped)."""

    def rhs(t, y):
        xi = _as_body_array(xi_of_t(t))
        if not np.all(np.isfinite(xi)):
            raise IntegrationError("non-finite body velocity", t)
        c, s = math.cos(y[2]), math.sin(y[2])
        return np.array([c * xi[0] - s * xi[1], s * xi[0] + c * xi[1], xi[2]])

    return integrate(rhs, g0.as_array(), dt, t_final, columns=("x", "y", "theta"))


def se2_exp(xi: Sequence[float], t: float) -> GroupElementSE2:
    """Closed-form pose after moving with constant body velocity xi for time t from identity."""
    vx, vy, w = (float(v) for v in xi)
    th = w * t
    if abs(th) < 1e-12:
        return GroupElementSE2(vx * t, vy * t, th)
    a = math.sin(th) / w
    b = (1.0 - math.cos(th)) / w
    return GroupElementSE2(a * vx - b * vy, b * vx + a * vy, th)


def fit_first_harmonic(times: Sequence[float], samples: Sequence[float], omega: float) -> FirstHarmonicFit:
    """Least-squares fit s ~ Theta cos(omega t - psi) + C over the trailing whole periods."""
    t = np.asarray(times, dtype=float)
    s = np.asarray(samples, dtype=float)
    if omega <= 0:
        raise ValueError("omega must be positive")
    if t.shape != s.shape or t.ndim != 1:
        raise ValueError("times and samples must be equal-length 1-D sequences")
    period = 2.0 * math.pi / omega
    span = t[-1] - t[0] if len(t) > 1 else 0.0
    n_periods = math.floor(span / period * (1 + 1e-12))
    if n_periods < 1:
        raise ValueError("fewer than one period of data")
    # Half-open window (t_end - n P, t_end] so whole periods are sampled once.
    start = t[-1] - n_periods * period
    sel = t > start + 1e-9 * period
    tt, ss = t[sel], s[sel]
    basis = np.column_stack([np.cos(omega * tt), np.sin(omega * tt), np.ones_like(tt)])
    (ca, sa, c0), *_ = np.linalg.lstsq(basis, ss, rcond=None)
    theta_amp = math.hypot(ca, sa)
    if theta_amp <= 1e-12 * max(1.0, abs(c0)):
        return FirstHarmonicFit(0.0, 0.0, float(c0), omega)
    psi = math.atan2(sa, ca)
    if psi <= -math.pi:
        psi = math.pi
    return FirstHarmonicFit(float(theta_amp), float(psi), float(c0), omega)
