"""Joint-driven and platform-driven simulation of the snake on a platform."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from ..se2 import DEFAULT_DT, GroupElementSE2, IntegrationError, Trajectory, integrate, rotation
from .kinematics import (
    EPS_INVERT,
    EPS_SINGULAR,
    Gait,
    NonInvertible,
    SingularShape,
    SnakeParams,
    discriminant,
    internal_numerator,
    scalar_terms,
)

COLUMNS = (
    "x", "y", "theta", "x_p", "y_p", "alpha1", "alpha2",
    "xi_x", "xi_y", "xi_theta", "alpha1_dot", "alpha2_dot", "u_p", "v_p",
)

# Offset used to average across a removable 0/0 of the connections.
_PATCH_DELTA = 1e-5


class JointDrivenRates:
    """Body velocity and body-frame platform velocity induced by a prescribed gait.

    Where the gait crosses D = 0 with a removable 0/0, the rates are taken as the
    symmetric average just either side of the crossing.
    """

    def __init__(self, gait: Gait, params: SnakeParams, eps_singular: float = EPS_SINGULAR):
        self.gait = gait
        self.params = params
        self.eps = eps_singular

    def _direct(self, t: float):
        a1, a2, d1, d2 = self.gait.scalar_state(t)
        D, (m00, m01, m20, m21), ((n00, n01), (n10, n11)) = scalar_terms(a1, a2, self.params)
        xi = np.array([(m00 * d1 + m01 * d2) / D, 0.0, (m20 * d1 + m21 * d2) / D])
        u = np.array([(n00 * d1 + n01 * d2) / D, (n10 * d1 + n11 * d2) / D])
        return D, xi, u

    def __call__(self, t: float):
        D, xi, u = self._direct(t)
        if abs(D) > self.eps:
            return xi, u
        delta = _PATCH_DELTA * self.gait.period
        for _ in range(6):
            Dm, xim, um = self._direct(t - delta)
            Dp, xip, up = self._direct(t + delta)
            if abs(Dm) > self.eps and abs(Dp) > self.eps:
                scale = 1.0 + np.abs(xim).max() + np.abs(xip).max()
                if np.abs(xip - xim).max() > 1e-2 * scale:
                    raise SingularShape(D, tuple(self.gait.shape(t)))
                return 0.5 * (xim + xip), 0.5 * (um + up)
            delta *= 4.0
        raise SingularShape(D, tuple(self.gait.shape(t)))

    def numerator_scale(self, t: float) -> float:
        b = self.gait.shape(t)
        bd = self.gait.rate(t)
        Mn = internal_numerator(b[0], b[1], self.params.R)
        return float(np.abs(Mn).max() * np.abs(bd).max())

    def check_interval(self, t0: float, t1: float):
        """Abort if D changes sign on [t0, t1] at a non-removable crossing."""
        R = self.params.R
        D = lambda t: float(discriminant(*self.gait.shape(t), R))
        d0, d1 = D(t0), D(t1)
        if d0 == 0.0 or d1 == 0.0 or (d0 > 0) == (d1 > 0):
            return
        ts = brentq(D, t0, t1, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        b = self.gait.shape(ts)
        num = internal_numerator(b[0], b[1], R) @ self.gait.rate(ts)
        if np.abs(num).max() > 1e-6 * (1.0 + self.numerator_scale(ts)):
            raise IntegrationError(
                f"gait crosses the singular locus D = 0 at shape ({b[0]:.6f}, {b[1]:.6f}) with a pole", ts
            )


def joint_driven_platform_source(gait: Gait, params: SnakeParams) -> Callable[[float], np.ndarray]:
    """Body-frame platform velocity u(t) produced by running `gait` from rest."""
    rates = JointDrivenRates(gait, params)
    return lambda t: rates(t)[1]


def simulate_snake_joint_driven(
    g0: GroupElementSE2,
    platform0: Sequence[float],
    gait: Gait,
    params: SnakeParams,
    dt: float = DEFAULT_DT,
    t_final: float | None = None,
    eps_singular: float = EPS_SINGULAR,
) -> Trajectory:
    """Prescribed joint motion; robot pose is relative to the platform, platform pose is inertial."""
    if t_final is None:
        t_final = gait.period
    rates = JointDrivenRates(gait, params, eps_singular)

    def rhs(t, y):
        xi, u = rates(t)
        c, s = math.cos(y[2]), math.sin(y[2])
        return np.array([c * xi[0] - s * xi[1], s * xi[0] + c * xi[1], xi[2], c * u[0] - s * u[1], s * u[0] + c * u[1]])

    state = [g0.x, g0.y, g0.theta, float(platform0[0]), float(platform0[1])]
    last = [0.0]

    def guard(t, y):
        rates.check_interval(last[0], t)
        last[0] = t
        return y

    try:
        rates.check_interval(0.0, 0.0)
        fib = integrate(rhs, state, dt, t_final, post_step=guard)
    except SingularShape as exc:
        raise IntegrationError(str(exc), last[0]) from exc
    return _assemble(fib, gait.shape, gait.rate, rates)


def _assemble(fib: Trajectory, shape_fn, rate_fn, rates) -> Trajectory:
    rows = []
    for t, y in zip(fib.times, fib.states):
        xi, u = rates(t)
        b = shape_fn(t)
        bd = rate_fn(t)
        rows.append(np.concatenate([y, b, xi, bd, u]))
    return Trajectory(fib.times, np.array(rows), fib.dt, COLUMNS)


def simulate_snake_platform_driven(
    b0: Sequence[float],
    theta0: float,
    u_of_t: Callable[[float], Sequence[float]],
    params: SnakeParams,
    dt: float = DEFAULT_DT,
    t_final: float = 1.0,
    g0: GroupElementSE2 | None = None,
    platform0: Sequence[float] = (0.0, 0.0),
    eps_singular: float = EPS_SINGULAR,
    eps_invert: float = EPS_INVERT,
) -> Trajectory:
    """Prescribed body-frame platform velocity drives the passive joints."""
    g0 = g0 if g0 is not None else GroupElementSE2(0.0, 0.0, theta0)
    if g0.theta != theta0:
        g0 = GroupElementSE2(g0.x, g0.y, theta0)

    def shape_rate(t, b):
        u0, u1 = (float(v) for v in u_of_t(t))
        if not (math.isfinite(u0) and math.isfinite(u1)):
            raise IntegrationError("non-finite platform input", t)
        D, (m00, m01, m20, m21), ((n00, n01), (n10, n11)) = scalar_terms(b[0], b[1], params)
        if not abs(D) > eps_singular:
            raise SingularShape(D, tuple(b))
        det = n00 * n11 - n01 * n10
        scale = max(abs(n00), abs(n01), abs(n10), abs(n11))
        if abs(det) <= eps_invert * scale * scale:
            raise NonInvertible(det / (D * D), tuple(b))
        # b' = D N^-1 u and xi = M N^-1 u, so D never divides here
        v0 = (n11 * u0 - n01 * u1) / det
        v1 = (-n10 * u0 + n00 * u1) / det
        bd = np.array([D * v0, D * v1])
        xi = np.array([m00 * v0 + m01 * v1, 0.0, m20 * v0 + m21 * v1])
        return bd, xi, np.array([u0, u1])

    def rhs(t, y):
        bd, xi, u = shape_rate(t, y[5:7])
        c, s = math.cos(y[2]), math.sin(y[2])
        return np.array([
            c * xi[0] - s * xi[1], s * xi[0] + c * xi[1], xi[2],
            c * u[0] - s * u[1], s * u[0] + c * u[1], bd[0], bd[1],
        ])

    prev = {"t": 0.0, "sig": _signature(np.asarray(b0, float), params)}

    def guard(t, y):
        sig = _signature(y[5:7], params)
        if np.any(np.sign(sig) != np.sign(prev["sig"])):
            raise IntegrationError("shape trajectory crossed a locus where the external connection is singular", t)
        prev["t"], prev["sig"] = t, sig
        return y

    state = [g0.x, g0.y, g0.theta, float(platform0[0]), float(platform0[1]), float(b0[0]), float(b0[1])]
    try:
        fib = integrate(rhs, state, dt, t_final, post_step=guard)
    except (SingularShape, NonInvertible) as exc:
        raise IntegrationError(str(exc), prev["t"]) from exc
    rows = []
    for t, y in zip(fib.times, fib.states):
        bd, xi, u = shape_rate(t, y[5:7])
        rows.append(np.concatenate([y, xi, bd, u]))
    return Trajectory(fib.times, np.array(rows), fib.dt, COLUMNS)


def _signature(b: np.ndarray, params: SnakeParams) -> np.ndarray:
    """Signs of D and det(A_ext); a flip between steps means a singular locus was crossed."""
    D, _, ((n00, n01), (n10, n11)) = scalar_terms(b[0], b[1], params)
    return np.array([D, n00 * n11 - n01 * n10])


def constraint_residuals(traj: Trajectory, params: SnakeParams) -> np.ndarray:
    """Wheel no-slip residuals (n, 3) recomputed from the stored states and rates."""
    from .kinematics import constraint_residual

    out = np.empty((len(traj), 3))
    col = traj.columns.index
    for k, s in enumerate(traj.states):
        g = GroupElementSE2(s[col("x")], s[col("y")], s[col("theta")])
        xi = s[col("xi_x"):col("xi_theta") + 1]
        gd = np.r_[rotation(g.theta) @ xi[:2], xi[2]]
        b = s[col("alpha1"):col("alpha2") + 1]
        bd = s[col("alpha1_dot"):col("alpha2_dot") + 1]
        out[k] = constraint_residual(g, b, gd, bd, params)
    return out


def linear_momentum(traj: Trajectory, params: SnakeParams) -> np.ndarray:
    """Total world-frame linear momentum (n, 2) of links plus platform."""
    from .kinematics import total_linear_momentum

    col = traj.columns.index
    out = np.empty((len(traj), 2))
    for k, s in enumerate(traj.states):
        g = GroupElementSE2(s[col("x")], s[col("y")], s[col("theta")])
        xi = s[col("xi_x"):col("xi_theta") + 1]
        b = s[col("alpha1"):col("alpha2") + 1]
        bd = s[col("alpha1_dot"):col("alpha2_dot") + 1]
        vp = rotation(g.theta) @ s[col("u_p"):col("v_p") + 1]
        out[k] = total_linear_momentum(g, b, xi, bd, vp, params)
    return out


def per_cycle(traj: Trajectory, period: float) -> list[dict]:
    """Net change of the robot pose over each whole period of the trajectory."""
    n = int(round(period / traj.dt))
    if abs(n * traj.dt - period) > 1e-9 * period:
        raise ValueError("period is not a whole number of steps")
    col = traj.columns.index
    out = []
    for k in range(0, len(traj) - n, n):
        a, b = traj.states[k], traj.states[k + n]
        th0 = a[col("theta")]
        dxy = np.array([b[col("x")] - a[col("x")], b[col("y")] - a[col("y")]])
        body = rotation(-th0) @ dxy
        out.append({
            "t0": float(traj.times[k]),
            "dtheta": float(b[col("theta")] - th0),
            "dx_body": float(body[0]),
            "dy_body": float(body[1]),
            "dx_p": float(b[col("x_p")] - a[col("x_p")]),
            "dy_p": float(b[col("y_p")] - a[col("y_p")]),
        })
    return out


__all__ = [
    "COLUMNS",
    "JointDrivenRates",
    "constraint_residuals",
    "joint_driven_platform_source",
    "linear_momentum",
    "per_cycle",
    "simulate_snake_joint_driven",
    "simulate_snake_platform_driven",
]
