"""Passive (reduced) and forced (constrained Euler-Lagrange) simulation of the beanie."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..se2 import DEFAULT_DT, IntegrationError, Trajectory, n_steps_for
from .model import (
    BeanieFullState,
    BeanieParams,
    MomentumSet,
    derived_constants,
    momenta_from_state,
    reduced_rhs_tuple,
)

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

PASSIVE_COLUMNS = (
    "x", "y", "theta", "phi", "x_p", "y_p",
    "r", "w", "p_x", "p_y", "rotor_rate",
    "J_LT", "J_RW", "J_X", "J_Y",
)
FORCED_COLUMNS = BeanieFullState.FIELDS + ("J_LT", "J_RW", "J_X", "J_Y", "slip")


def simulate_passive(params: BeanieParams, init: BeanieFullState, dt: float = DEFAULT_DT, t_final: float = 1.0) -> Trajectory:
    """Integrate the reduced momentum dynamics and rebuild the configuration alongside.

    Reduced variables and configuration (x, y, theta, x_p, y_p) share one RK4 state, so the
    configuration velocities at every stage come from the 5x5 momentum/no-slip solve.
    """
    if abs(init.slip_residual(params.a)) > 1e-9:
        raise ValueError("initial velocities violate the no-slip constraint")
    c = derived_constants(params)
    m, B, C, a, M = params.m, params.B, params.C, params.a, params.M
    d = c.d
    J0 = momenta_from_state(params, init)
    y = [
        J0.J_LT / d, (J0.J_RW - B * init.phid) / d, J0.J_X / d, J0.J_Y / d, init.phi, init.phid,
        init.x, init.y, init.theta, init.x_p, init.y_p,
    ]

    def rhs(s):
        r, w, px, py, phi, al, _x, _y, th, _xp, _yp = s
        dr = reduced_rhs_tuple(c, r, w, px, py, phi, al)
        # closed-form solve of the momentum definitions plus no-slip (scaled by d)
        sn, cs = math.sin(th), math.cos(th)
        W = d * w
        Jy = d * py
        lon = d * r / m
        plat_lon = d * (px - r) / M
        lat = ((B + C) * Jy + M * a * W) / d
        thd = ((m + M) * W - m * a * Jy) / d
        plat_lat = lat - a * thd
        xpd = cs * plat_lon - sn * plat_lat
        ypd = sn * plat_lon + cs * plat_lat
        xd = cs * lon - sn * lat - xpd
        yd = sn * lon + cs * lat - ypd
        return dr + (xd, yd, thd, xpd, ypd)

    n = n_steps_for(dt, t_final)
    out = np.empty((n + 1, 11))
    out[0] = y
    h2, h6 = 0.5 * dt, dt / 6.0
    for i in range(n):
        k1 = rhs(y)
        k2 = rhs([v + h2 * k for v, k in zip(y, k1)])
        k3 = rhs([v + h2 * k for v, k in zip(y, k2)])
        k4 = rhs([v + dt * k for v, k in zip(y, k3)])
        y = [v + h6 * (p + 2.0 * q + 2.0 * u + z) for v, p, q, u, z in zip(y, k1, k2, k3, k4)]
        if not all(math.isfinite(v) for v in y):
            raise IntegrationError("non-finite reduced state", (i + 1) * dt)
        out[i + 1] = y
    r, w, px, py, phi, al, x, yy, th, xp, yp = out.T
    states = np.column_stack([x, yy, th, phi, xp, yp, r, w, px, py, al, d * r, d * w + B * al, d * px, d * py])
    return Trajectory(dt * np.arange(n + 1), states, dt, PASSIVE_COLUMNS)


# ---- forced dynamics (batched over independent beanies) ----

class PlatformMotion:
    """Prescribed platform velocity and acceleration, possibly fed back from the heading."""

    def kinematics(self, t: float, theta: np.ndarray, thetad: np.ndarray):
        raise NotImplementedError


@dataclass(frozen=True)
class BodyFrameControl(PlatformMotion):
    """Platform world velocity R(theta) (0, A sin(omega t)), velocity-level reading of the controller.

    `target` selects which simulated beanie's heading drives the platform; None means each row
    uses its own heading.
    """

    A: float | np.ndarray = 1.0
    omega: float | np.ndarray = 1.0
    target: int | None = None

    def kinematics(self, t, theta, thetad):
        if self.target is not None:
            theta = np.broadcast_to(theta[self.target], theta.shape)
            thetad = np.broadcast_to(thetad[self.target], thetad.shape)
        wt = np.asarray(self.omega) * t
        Y = np.asarray(self.A) * np.sin(wt)
        Yd = np.asarray(self.A) * np.asarray(self.omega) * np.cos(wt)
        sn, cs = np.sin(theta), np.cos(theta)
        vx, vy = -sn * Y, cs * Y
        ax = -sn * Yd - cs * thetad * Y
        ay = cs * Yd - sn * thetad * Y
        return vx, vy, ax, ay


@dataclass(frozen=True)
class PrescribedVelocity(PlatformMotion):
    """Heading-independent platform velocity v(t) with its derivative a(t)."""

    velocity: Callable[[float], Sequence[float]]
    acceleration: Callable[[float], Sequence[float]]

    def kinematics(self, t, theta, thetad):
        vx, vy = self.velocity(t)
        ax, ay = self.acceleration(t)
        z = np.zeros_like(theta)
        return z + vx, z + vy, z + ax, z + ay


def still_platform() -> PrescribedVelocity:
    zero = lambda t: (0.0, 0.0)
    return PrescribedVelocity(zero, zero)


@dataclass(frozen=True)
class _ParamArrays:
    m: np.ndarray
    B: np.ndarray
    C: np.ndarray
    a: np.ndarray
    k: np.ndarray
    M: np.ndarray

    @classmethod
    def of(cls, params: Sequence[BeanieParams]) -> "_ParamArrays":
        return cls(*(np.array([getattr(p, f) for p in params], dtype=float) for f in ("m", "B", "C", "a", "k", "M")))


def _forced_rhs(t: float, Y: np.ndarray, P: _ParamArrays, motion: PlatformMotion | None) -> np.ndarray:
    x, y, th, phi, xp, yp, xd, yd, thd, phd, xpd, ypd = Y.T
    sn, cs = np.sin(th), np.cos(th)
    rhs_c = thd * (cs * xd + sn * yd)
    out = np.empty_like(Y)
    out[:, 0], out[:, 1], out[:, 2], out[:, 3] = xd, yd, thd, phd
    if motion is None:
        # free platform: 6-DOF mass matrix, constraint acts on the relative velocity
        mM = P.m * P.M
        S = (P.m + P.M) / mM + P.a**2 / P.C
        lam = (rhs_c + P.a * P.k * phi / P.C) / S
        out[:, 4], out[:, 5] = xpd, ypd
        out[:, 6] = -sn * (P.m + P.M) / mM * lam
        out[:, 7] = cs * (P.m + P.M) / mM * lam
        out[:, 8] = P.k * phi / P.C - P.a / P.C * lam
        out[:, 9] = -(P.B + P.C) * P.k * phi / (P.B * P.C) + P.a / P.C * lam
        out[:, 10] = sn / P.M * lam
        out[:, 11] = -cs / P.M * lam
        return out
    vx, vy, ax, ay = motion.kinematics(t, th, thd)
    S = 1.0 / P.m + P.a**2 / P.C
    lam = (rhs_c - (sn * ax - cs * ay - P.a * P.k * phi / P.C)) / S
    out[:, 4], out[:, 5] = vx, vy
    out[:, 6] = -ax - sn / P.m * lam
    out[:, 7] = -ay + cs / P.m * lam
    out[:, 8] = P.k * phi / P.C - P.a / P.C * lam
    out[:, 9] = -(P.B + P.C) * P.k * phi / (P.B * P.C) + P.a / P.C * lam
    out[:, 10], out[:, 11] = ax, ay
    return out


def _project(t: float, Y: np.ndarray, P: _ParamArrays, motion: PlatformMotion | None) -> np.ndarray:
    """Remove the no-slip violation from the velocities in the mass metric."""
    th = Y[:, 2]
    sn, cs = np.sin(th), np.cos(th)
    viol = -sn * Y[:, 6] + cs * Y[:, 7] - P.a * Y[:, 8]
    Y = Y.copy()
    if motion is None:
        mM = P.m * P.M
        S = (P.m + P.M) / mM + P.a**2 / P.C
        g = viol / S
        Y[:, 6] -= -sn * (P.m + P.M) / mM * g
        Y[:, 7] -= cs * (P.m + P.M) / mM * g
        Y[:, 10] -= sn / P.M * g
        Y[:, 11] -= -cs / P.M * g
    else:
        S = 1.0 / P.m + P.a**2 / P.C
        g = viol / S
        Y[:, 6] -= -sn / P.m * g
        Y[:, 7] -= cs / P.m * g
        vx, vy, _, _ = motion.kinematics(t, th, Y[:, 8])
        Y[:, 10], Y[:, 11] = vx, vy
    Y[:, 8] -= -P.a / P.C * g
    Y[:, 9] -= P.a / P.C * g
    return Y


def _momenta_rows(Y: np.ndarray, P: _ParamArrays) -> np.ndarray:
    th = Y[:, 2]
    sn, cs = np.sin(th), np.cos(th)
    X = Y[:, 6] + Y[:, 10]
    Yv = Y[:, 7] + Y[:, 11]
    lon = X * cs + Yv * sn
    lat = -X * sn + Yv * cs
    return np.column_stack([
        P.m * lon,
        P.m * P.a * lat + (P.B + P.C) * Y[:, 8] + P.B * Y[:, 9],
        P.m * lon + P.M * (Y[:, 10] * cs + Y[:, 11] * sn),
        P.m * lat + P.M * (-Y[:, 10] * sn + Y[:, 11] * cs),
    ])


def integrate_forced(
    params: Sequence[BeanieParams],
    inits: np.ndarray,
    motion: PlatformMotion | None,
    dt: float,
    t_final: float,
    on_step: Callable[[int, float, np.ndarray], None] | None = None,
) -> np.ndarray:
    """RK4 over a batch of independent beanies; rows that go non-finite are frozen as nan.

    `on_step(i, t, Y)` sees every sample, including the initial one.
    """
    P = _ParamArrays.of(params)
    Y = np.array(inits, dtype=float).reshape(len(params), 12)
    if motion is not None:
        Y = _project(0.0, Y, P, motion)
    n = n_steps_for(dt, t_final)
    if on_step:
        on_step(0, 0.0, Y)
    for i in range(n):
        t = i * dt
        with np.errstate(all="ignore"):
            k1 = _forced_rhs(t, Y, P, motion)
            k2 = _forced_rhs(t + 0.5 * dt, Y + 0.5 * dt * k1, P, motion)
            k3 = _forced_rhs(t + 0.5 * dt, Y + 0.5 * dt * k2, P, motion)
            k4 = _forced_rhs(t + dt, Y + dt * k3, P, motion)
            Y = Y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            Y = _project(t + dt, Y, P, motion)
        bad = ~np.all(np.isfinite(Y), axis=1)
        if bad.any():
            Y[bad] = np.nan
        if on_step:
            on_step(i + 1, (i + 1) * dt, Y)
    return Y


def simulate_forced_many(
    params: Sequence[BeanieParams],
    inits: Sequence[BeanieFullState],
    platform_motion: PlatformMotion | None,
    dt: float = DEFAULT_DT,
    t_final: float = 1.0,
) -> list[Trajectory]:
    P = _ParamArrays.of(params)
    n = n_steps_for(dt, t_final)
    store = np.empty((n + 1, len(params), 12))

    def keep(i, t, Y):
        store[i] = Y

    Y0 = np.array([s.as_array() for s in inits])
    integrate_forced(params, Y0, platform_motion, dt, t_final, keep)
    times = dt * np.arange(n + 1)
    out = []
    for j in range(len(params)):
        rows = store[:, j, :]
        if not np.all(np.isfinite(rows)):
            k = int(np.argmax(~np.all(np.isfinite(rows), axis=1)))
            raise IntegrationError(f"forced simulation of beanie {j} diverged", times[k])
        Pj = _ParamArrays.of([params[j]])
        J = _momenta_rows(rows, _broadcast(Pj, len(rows)))
        slip = -np.sin(rows[:, 2]) * rows[:, 6] + np.cos(rows[:, 2]) * rows[:, 7] - params[j].a * rows[:, 8]
        out.append(Trajectory(times, np.column_stack([rows, J, slip]), dt, FORCED_COLUMNS))
    return out


def _broadcast(P: _ParamArrays, n: int) -> _ParamArrays:
    return _ParamArrays(*(np.full(n, getattr(P, f)[0]) for f in ("m", "B", "C", "a", "k", "M")))


def simulate_forced(
    params: BeanieParams,
    init: BeanieFullState,
    platform_motion: PlatformMotion | None,
    dt: float = DEFAULT_DT,
    t_final: float = 1.0,
) -> Trajectory:
    """Constrained Euler-Lagrange dynamics of one beanie.

    A PlatformMotion prescribes the platform; None leaves the platform free and unactuated.
    """
    return simulate_forced_many([params], [init], platform_motion, dt, t_final)[0]


def trailing_mean(times: np.ndarray, values: np.ndarray, window: float) -> float:
    """Time average over (t_end - window, t_end] by the trapezoid rule, interpolating the left edge."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    start = t[-1] - window
    if start < t[0] - 1e-9 * max(1.0, window):
        raise ValueError("trajectory shorter than the averaging window")
    k = int(np.searchsorted(t, start, side="right"))
    if k == 0:
        return float(_trapezoid(v, t) / (t[-1] - t[0]))
    frac = (start - t[k - 1]) / (t[k] - t[k - 1])
    v0 = v[k - 1] + frac * (v[k] - v[k - 1])
    tt = np.concatenate([[start], t[k:]])
    vv = np.concatenate([[v0], v[k:]])
    return float(_trapezoid(vv, tt) / window)


def mean_jlt_metric(traj: Trajectory, omega: float, n_periods: int = 3) -> float:
    """Mean forward momentum over the final n_periods actuation periods."""
    if omega <= 0 or n_periods < 1:
        raise ValueError("omega and n_periods must be positive")
    return trailing_mean(traj.times, traj.column("J_LT"), n_periods * 2.0 * math.pi / omega)


__all__ = [
    "BodyFrameControl",
    "MomentumSet",
    "PlatformMotion",
    "PrescribedVelocity",
    "integrate_forced",
    "mean_jlt_metric",
    "simulate_forced",
    "simulate_forced_many",
    "simulate_passive",
    "still_platform",
    "trailing_mean",
]
