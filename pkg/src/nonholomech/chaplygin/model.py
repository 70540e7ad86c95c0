"""Chaplygin beanie on a movable platform: parameters, momenta and reduced dynamics."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np


@dataclass(frozen=True)
class BeanieParams:
    m: float = 1.0
    B: float = 1.0
    C: float = 1.0
    a: float = 1.0
    k: float = 1.0
    M: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{f.name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class BeanieFullState:
    """Vehicle position (x, y) is relative to the platform; (x_p, y_p) is inertial."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    phi: float = 0.0
    x_p: float = 0.0
    y_p: float = 0.0
    xd: float = 0.0
    yd: float = 0.0
    thetad: float = 0.0
    phid: float = 0.0
    x_pd: float = 0.0
    y_pd: float = 0.0

    FIELDS = ("x", "y", "theta", "phi", "x_p", "y_p", "xd", "yd", "thetad", "phid", "x_pd", "y_pd")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in self.FIELDS])

    @classmethod
    def from_array(cls, v) -> "BeanieFullState":
        return cls(*(float(x) for x in v))

    def slip_residual(self, a: float) -> float:
        s, c = math.sin(self.theta), math.cos(self.theta)
        return -self.xd * s + self.yd * c - a * self.thetad


@dataclass(frozen=True)
class MomentumSet:
    J_LT: float
    J_RW: float
    J_X: float
    J_Y: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_array()):
            raise ValueError("momenta must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.J_LT, self.J_RW, self.J_X, self.J_Y])


@dataclass(frozen=True)
class ReducedState:
    r: float = 0.0
    w: float = 0.0
    p_x: float = 0.0
    p_y: float = 0.0
    phi: float = 0.0
    alpha_rotor_rate: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.w, self.p_x, self.p_y, self.phi, self.alpha_rotor_rate])

    @classmethod
    def from_array(cls, v) -> "ReducedState":
        return cls(*(float(x) for x in v))


@dataclass(frozen=True)
class DerivedConstants:
    d: float
    gamma1: float
    gamma2: float
    gamma3: float
    lambda1: float
    lambda2: float
    mu1: float
    mu2: float
    nu0: float
    nu1: float
    nu2: float
    nu3: float
    nu4: float
    nu5: float
    Dcap: float


def derived_constants(p: BeanieParams) -> DerivedConstants:
    m, B, C, a, k, M = p.m, p.B, p.C, p.a, p.k, p.M
    d = m * (B + C) + M * (m * a * a + B + C)
    Dcap = B * (m * M * a * a + C * (m + M))
    dD = d * Dcap
    return DerivedConstants(
        d=d,
        gamma1=-m * m * a * (B + C) / d,
        gamma2=(m * (m + M) * (B + C) - m * m * M * a * a) / d,
        gamma3=m * M * a * (m + M) / d,
        lambda1=m * a * a,
        lambda2=-a * (m + M),
        mu1=-m * a,
        mu2=m + M,
        nu0=B / d,
        nu1=-d * k / Dcap,
        nu2=-B * m * a * a * (m + M) / dD,
        nu3=a * B * (m + M) ** 2 / dD,
        nu4=B * m * m * a * a / dD,
        nu5=-m * B * a * (m + M) / dD,
        Dcap=Dcap,
    )


def momenta_from_state(p: BeanieParams, s: BeanieFullState) -> MomentumSet:
    """Nonholonomic momenta; the vehicle's inertial velocity is its relative velocity plus the platform's."""
    sn, cs = math.sin(s.theta), math.cos(s.theta)
    X = s.xd + s.x_pd
    Y = s.yd + s.y_pd
    lon = X * cs + Y * sn
    lat = -X * sn + Y * cs
    return MomentumSet(
        J_LT=p.m * lon,
        J_RW=p.m * p.a * lat + (p.B + p.C) * s.thetad + p.B * s.phid,
        J_X=p.m * lon + p.M * (s.x_pd * cs + s.y_pd * sn),
        J_Y=p.m * lat + p.M * (-s.x_pd * sn + s.y_pd * cs),
    )


def reduced_from_momenta(p: BeanieParams, J: MomentumSet, phi: float, rotor_rate: float) -> ReducedState:
    d = derived_constants(p).d
    return ReducedState(J.J_LT / d, (J.J_RW - p.B * rotor_rate) / d, J.J_X / d, J.J_Y / d, phi, rotor_rate)


def momenta_from_reduced(p: BeanieParams, s: ReducedState) -> MomentumSet:
    d = derived_constants(p).d
    return MomentumSet(d * s.r, d * s.w + p.B * s.alpha_rotor_rate, d * s.p_x, d * s.p_y)


def rotor_acceleration(c: DerivedConstants, r, w, px, py, phi):
    # The rotor coupling constants nu2..nu5 enter multiplied by d^2 (the momenta here are scaled by 1/d).
    d2 = c.d * c.d
    return c.nu1 * phi + d2 * (c.nu2 * r * py + c.nu3 * r * w + c.nu4 * px * py + c.nu5 * px * w)


def reduced_rhs_tuple(c: DerivedConstants, r, w, px, py, phi, al):
    ad = rotor_acceleration(c, r, w, px, py, phi)
    return (
        c.gamma1 * py * py + c.gamma2 * py * w + c.gamma3 * w * w,
        c.lambda1 * r * py + c.lambda2 * r * w - c.nu0 * ad,
        c.mu1 * py * py + c.mu2 * py * w,
        -c.mu1 * px * py - c.mu2 * px * w,
        al,
        ad,
    )


def reduced_rhs(c: DerivedConstants, s: ReducedState) -> ReducedState:
    """Time derivative of the scaled reduced state."""
    return ReducedState(*reduced_rhs_tuple(c, *s.as_array()))


def evolution_rhs(p: BeanieParams, J: MomentumSet, rotor_rate: float) -> MomentumSet:
    """Unscaled momentum evolution; kept as an independent cross-check of the reduced dynamics."""
    m, B, C, a, M = p.m, p.B, p.C, p.a, p.M
    d = derived_constants(p).d
    W = J.J_RW - B * rotor_rate
    return MomentumSet(
        J_LT=-m * ((B + C) * J.J_Y + M * a * W) * (m * a * J.J_Y - (m + M) * W) / d**2,
        J_RW=a * J.J_LT * (m * a * J.J_Y - (m + M) * W) / d,
        J_X=J.J_Y * (-m * a * J.J_Y + (m + M) * W) / d,
        J_Y=-J.J_X * (-m * a * J.J_Y + (m + M) * W) / d,
    )


def velocities_from_momenta(p: BeanieParams, theta: float, J: MomentumSet, rotor_rate: float) -> np.ndarray:
    """Solve the four momentum definitions plus the no-slip constraint for (xd, yd, thetad, x_pd, y_pd)."""
    m, B, C, a, M = p.m, p.B, p.C, p.a, p.M
    d = m * (B + C) + M * (m * a * a + B + C)
    sn, cs = math.sin(theta), math.cos(theta)
    W = J.J_RW - B * rotor_rate
    lon = J.J_LT / m
    plat_lon = (J.J_X - J.J_LT) / M
    lat = ((B + C) * J.J_Y + M * a * W) / d
    thetad = ((m + M) * W - m * a * J.J_Y) / d
    plat_lat = lat - a * thetad
    X, Y = cs * lon - sn * lat, sn * lon + cs * lat
    x_pd, y_pd = cs * plat_lon - sn * plat_lat, sn * plat_lon + cs * plat_lat
    return np.array([X - x_pd, Y - y_pd, thetad, x_pd, y_pd])


def velocities_from_momenta_linear(p: BeanieParams, theta: float, J: MomentumSet, rotor_rate: float) -> np.ndarray:
    """Same solve as `velocities_from_momenta`, written as an explicit 5x5 linear system."""
    m, B, C, a, M = p.m, p.B, p.C, p.a, p.M
    sn, cs = math.sin(theta), math.cos(theta)
    # unknowns (xd, yd, thetad, x_pd, y_pd)
    K = np.array([
        [m * cs, m * sn, 0.0, m * cs, m * sn],
        [-m * a * sn, m * a * cs, B + C, -m * a * sn, m * a * cs],
        [m * cs, m * sn, 0.0, (m + M) * cs, (m + M) * sn],
        [-m * sn, m * cs, 0.0, -(m + M) * sn, (m + M) * cs],
        [-sn, cs, -a, 0.0, 0.0],
    ])
    rhs = np.array([J.J_LT, J.J_RW - B * rotor_rate, J.J_X, J.J_Y, 0.0])
    return np.linalg.solve(K, rhs)


def frequencies(p: BeanieParams) -> tuple[float, float]:
    """Rotor natural frequency and the free body-rotor modal frequency."""
    return math.sqrt(p.k / p.B), math.sqrt(p.k * (p.B + p.C) / (p.B * p.C))


def stability_jacobian(c: DerivedConstants, r_c: float) -> np.ndarray:
    """Linearisation in (w, phi, rotor rate) about (r_c, 0, 0, 0, 0, 0) on the zero-momentum set."""
    nu3 = c.d * c.d * c.nu3
    return np.array([
        [(c.lambda2 - c.nu0 * nu3) * r_c, -c.nu0 * c.nu1, 0.0],
        [0.0, 0.0, 1.0],
        [nu3 * r_c, c.nu1, 0.0],
    ])


def stability_polynomial(c: DerivedConstants, r_c: float) -> np.ndarray:
    """Coefficients (highest first) of p^3 + (nu0 nu3 - lambda2) r p^2 - nu1 p + lambda2 nu1 r."""
    nu3 = c.d * c.d * c.nu3
    return np.array([1.0, (c.nu0 * nu3 - c.lambda2) * r_c, -c.nu1, c.lambda2 * c.nu1 * r_c])


def stability_polynomial_roots(c: DerivedConstants, r_c: float) -> np.ndarray:
    if not r_c > 0:
        raise ValueError("r_c must be positive")
    return np.roots(stability_polynomial(c, r_c))


def control_body_frame(theta, A: float, omega: float, t: float):
    """World-frame platform velocity R(theta) (0, A sin(omega t))."""
    y = A * np.sin(omega * t)
    return -np.sin(theta) * y, np.cos(theta) * y
