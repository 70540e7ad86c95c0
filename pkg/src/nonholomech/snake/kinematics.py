"""Three-link wheeled snake on a movable platform: kinematics and connections."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..se2 import BodyVelocity, GroupElementSE2, left_lift, rotation

EPS_SINGULAR = 1e-6
EPS_INVERT = 1e-9


class SingularShape(ValueError):
    """The shape lies on (or too near) a locus where the internal connection blows up."""

    def __init__(self, D: float, shape=None):
        super().__init__(f"singular shape {shape}: D = {D:.3e}")
        self.D = D
        self.shape = shape


class NonInvertible(ValueError):
    """The external connection cannot be inverted at this shape."""

    def __init__(self, det: float, shape=None):
        super().__init__(f"external connection not invertible at {shape}: det = {det:.3e}")
        self.det = det
        self.shape = shape


@dataclass(frozen=True)
class SnakeParams:
    R: float = 1.0
    M_l: float = 1.0
    J: float = 1.0
    M_p: float = 3.0

    def __post_init__(self):
        for name in ("R", "M_l", "J", "M_p"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def total_mass(self) -> float:
        return 3.0 * self.M_l + self.M_p


@dataclass(frozen=True)
class Shape:
    alpha1: float
    alpha2: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha1) and math.isfinite(self.alpha2)):
            raise ValueError("shape angles must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha1, self.alpha2])


@dataclass(frozen=True)
class Gait:
    """alpha1 = B1 cos(wt) + c1, alpha2 = B2 cos(wt - phi) + c2."""

    B1: float
    B2: float
    phi: float
    omega: float = 1.0
    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def shape(self, t):
        w = self.omega
        return np.array([self.B1 * np.cos(w * t) + self.c1, self.B2 * np.cos(w * t - self.phi) + self.c2])

    def rate(self, t):
        w = self.omega
        return np.array([-self.B1 * w * np.sin(w * t), -self.B2 * w * np.sin(w * t - self.phi)])

    def scalar_state(self, t: float) -> tuple[float, float, float, float]:
        """(alpha1, alpha2, alpha1_dot, alpha2_dot) at time t, scalar fast path."""
        w = self.omega
        a, b = w * t, w * t - self.phi
        return (
            self.B1 * math.cos(a) + self.c1,
            self.B2 * math.cos(b) + self.c2,
            -self.B1 * w * math.sin(a),
            -self.B2 * w * math.sin(b),
        )

    def polygon(self, n: int = 720) -> np.ndarray:
        """Closed loop sampled at n points over one period, shape (n, 2)."""
        t = np.arange(n) * (self.period / n)
        return self.shape(t).T


@dataclass(frozen=True)
class ConnectionMatrix:
    values: np.ndarray
    shape: Shape
    kind: str

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __matmul__(self, other):
        return self.values @ np.asarray(other)


def _as_shape(b) -> Shape:
    return b if isinstance(b, Shape) else Shape(float(b[0]), float(b[1]))


# ---- vectorised building blocks (broadcast over arrays of alpha1, alpha2) ----

def discriminant(a1, a2, R: float):
    return (2.0 / R) * (-np.sin(a1) - np.sin(a1 - a2) + np.sin(a2))


def internal_numerator(a1, a2, R: float):
    """M(b) with xi = M(b) b_dot / D(b); shape (..., 3, 2)."""
    a1, a2 = np.broadcast_arrays(np.asarray(a1, float), np.asarray(a2, float))
    out = np.zeros(a1.shape + (3, 2))
    out[..., 0, 0] = np.cos(a1) + np.cos(a1 - a2)
    out[..., 0, 1] = 1.0 + np.cos(a1)
    out[..., 2, 0] = (2.0 / R) * (np.sin(a1) + np.sin(a1 - a2))
    out[..., 2, 1] = (2.0 / R) * np.sin(a1)
    return out


def link_offsets(a1, a2, R: float):
    """Link centres in the proximal-link frame and their shape Jacobians.

    Returns p (..., 3, 2) and S (..., 3, 2, 2) with S[..., i] = d p_i / d b.
    """
    a1, a2 = np.broadcast_arrays(np.asarray(a1, float), np.asarray(a2, float))
    h = 0.5 * R
    c1, s1 = np.cos(a1), np.sin(a1)
    c12, s12 = np.cos(a1 + a2), np.sin(a1 + a2)
    p = np.zeros(a1.shape + (3, 2))
    p[..., 1, 0] = h * (1.0 + c1)
    p[..., 1, 1] = h * s1
    p[..., 2, 0] = p[..., 1, 0] + h * (c1 + c12)
    p[..., 2, 1] = p[..., 1, 1] + h * (s1 + s12)
    S = np.zeros(a1.shape + (3, 2, 2))
    S[..., 1, 0, 0] = -h * s1
    S[..., 1, 1, 0] = h * c1
    S[..., 2, 0, 0] = -h * (2.0 * s1 + s12)
    S[..., 2, 1, 0] = h * (2.0 * c1 + c12)
    S[..., 2, 0, 1] = -h * s12
    S[..., 2, 1, 1] = h * c12
    return p, S


def external_numerator(a1, a2, params: SnakeParams):
    """N(b) with (body-frame platform velocity) = N(b) b_dot / D(b); shape (..., 2, 2)."""
    R = params.R
    D = discriminant(a1, a2, R)
    Mn = internal_numerator(a1, a2, R)
    p, S = link_offsets(a1, a2, R)
    psum = p.sum(axis=-2)
    # sum_i T_i xi with T_i = [I, J p_i], J the quarter-turn
    lin = 3.0 * Mn[..., 0:2, :]
    lin[..., 0, :] -= psum[..., 1, None] * Mn[..., 2, :]
    lin[..., 1, :] += psum[..., 0, None] * Mn[..., 2, :]
    total = lin + D[..., None, None] * S.sum(axis=-3)
    return -(params.M_l / params.total_mass) * total


def scalar_terms(a1: float, a2: float, params: SnakeParams):
    """Scalar fast path: D, the internal numerator entries (m00, m01, m20, m21) and N (2x2).

    xi = (m00 b1' + m01 b2', 0, m20 b1' + m21 b2') / D and platform body velocity = N b' / D.
    """
    R = params.R
    h = 0.5 * R
    s1, c1 = math.sin(a1), math.cos(a1)
    s12, c12 = math.sin(a1 + a2), math.cos(a1 + a2)
    sd, cd = math.sin(a1 - a2), math.cos(a1 - a2)
    D = (2.0 / R) * (-s1 - sd + math.sin(a2))
    m00, m01 = c1 + cd, 1.0 + c1
    m20, m21 = (2.0 / R) * (s1 + sd), (2.0 / R) * s1
    px = h * (2.0 + 3.0 * c1 + c12)
    py = h * (3.0 * s1 + s12)
    k = -params.M_l / params.total_mass
    N = (
        (k * (3.0 * m00 - py * m20 - D * h * (3.0 * s1 + s12)), k * (3.0 * m01 - py * m21 - D * h * s12)),
        (k * (px * m20 + D * h * (3.0 * c1 + c12)), k * (px * m21 + D * h * c12)),
    )
    return D, (m00, m01, m20, m21), N


def _check(D: float, b: Shape, eps: float):
    if not abs(D) > eps:
        raise SingularShape(float(D), b)


# ---- public operations ----

def link_poses(g: GroupElementSE2, b, params: SnakeParams) -> tuple[GroupElementSE2, ...]:
    b = _as_shape(b)
    R = params.R
    th = [g.theta, g.theta + b.alpha1, g.theta + b.alpha1 + b.alpha2]
    x, y = [g.x], [g.y]
    for i in (1, 2):
        x.append(x[-1] + 0.5 * R * (math.cos(th[i - 1]) + math.cos(th[i])))
        y.append(y[-1] + 0.5 * R * (math.sin(th[i - 1]) + math.sin(th[i])))
    return tuple(GroupElementSE2(x[i], y[i], th[i]) for i in range(3))


def constraint_residual(g: GroupElementSE2, b, g_dot, b_dot, params: SnakeParams) -> np.ndarray:
    """No-lateral-slip residual of each wheel, velocities relative to the platform.

    `g_dot` is either a BodyVelocity of the proximal link or its world-frame rate (x', y', theta').
    """
    b = _as_shape(b)
    if isinstance(g_dot, BodyVelocity):
        g_dot = left_lift(g) @ g_dot.as_array()
    gd = np.asarray(g_dot, dtype=float)
    bd = np.asarray(b_dot, dtype=float)
    R = params.R
    th = [g.theta, g.theta + b.alpha1, g.theta + b.alpha1 + b.alpha2]
    thd = [gd[2], gd[2] + bd[0], gd[2] + bd[0] + bd[1]]
    xd, yd = [gd[0]], [gd[1]]
    for i in (1, 2):
        xd.append(xd[-1] - 0.5 * R * (math.sin(th[i - 1]) * thd[i - 1] + math.sin(th[i]) * thd[i]))
        yd.append(yd[-1] + 0.5 * R * (math.cos(th[i - 1]) * thd[i - 1] + math.cos(th[i]) * thd[i]))
    return np.array([-xd[i] * math.sin(th[i]) + yd[i] * math.cos(th[i]) for i in range(3)])


def a_int(b, params: SnakeParams, eps_singular: float = EPS_SINGULAR) -> ConnectionMatrix:
    """Internal connection A_int; the body velocity is xi = -A_int b_dot."""
    b = _as_shape(b)
    D = float(discriminant(b.alpha1, b.alpha2, params.R))
    _check(D, b, eps_singular)
    return ConnectionMatrix(-internal_numerator(b.alpha1, b.alpha2, params.R) / D, b, "int")


def a_ext(b, params: SnakeParams, eps_singular: float = EPS_SINGULAR) -> ConnectionMatrix:
    """External connection: from rest the body-frame platform velocity is -A_ext b_dot."""
    b = _as_shape(b)
    D = float(discriminant(b.alpha1, b.alpha2, params.R))
    _check(D, b, eps_singular)
    return ConnectionMatrix(-external_numerator(b.alpha1, b.alpha2, params) / D, b, "ext")


def a_theta(theta: float, b, params: SnakeParams, eps_singular: float = EPS_SINGULAR) -> ConnectionMatrix:
    """Connection onto world-frame platform motion for proximal heading theta."""
    ext = a_ext(b, params, eps_singular)
    return ConnectionMatrix(rotation(theta) @ ext.values, ext.shape, "theta")


def invert_external(b, u, params: SnakeParams, eps_singular: float = EPS_SINGULAR, eps_invert: float = EPS_INVERT) -> np.ndarray:
    """Shape velocity producing body-frame platform velocity u from rest."""
    ext = a_ext(b, params, eps_singular).values
    det = float(np.linalg.det(ext))
    if abs(det) <= eps_invert * max(np.max(np.abs(ext)) ** 2, 1e-300):
        raise NonInvertible(det, _as_shape(b))
    return -np.linalg.solve(ext, np.asarray(u, dtype=float))


def total_linear_momentum(g: GroupElementSE2, b, xi, b_dot, platform_velocity, params: SnakeParams) -> np.ndarray:
    """World-frame linear momentum of links plus platform.

    `xi` is the proximal body velocity relative to the platform and `platform_velocity`
    the platform's world-frame velocity.
    """
    b = _as_shape(b)
    xi = np.asarray(xi.as_array() if isinstance(xi, BodyVelocity) else xi, dtype=float)
    p, S = link_offsets(b.alpha1, b.alpha2, params.R)
    vp = np.asarray(platform_velocity, dtype=float)
    rot = rotation(g.theta)
    total = params.M_p * vp
    for i in range(3):
        v_body = xi[:2] + xi[2] * np.array([-p[i, 1], p[i, 0]]) + S[i] @ np.asarray(b_dot, float)
        total = total + params.M_l * (rot @ v_body + vp)
    return total
