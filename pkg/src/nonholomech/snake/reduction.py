"""Harmonic-balance elimination of the heading from the world-frame platform connection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..se2 import FirstHarmonicFit, rk4_step
from .kinematics import EPS_SINGULAR, ConnectionMatrix, Gait, SnakeParams, a_theta
from .simulate import JointDrivenRates


@dataclass(frozen=True)
class ReducedThetaConnection:
    """Heading approximated as theta = a1 (alpha1 - c1) + a2 (alpha2 - c2) + C."""

    a1: float
    a2: float
    C: float
    c1: float
    c2: float
    params: SnakeParams

    def theta_of(self, alpha1, alpha2):
        return self.a1 * (np.asarray(alpha1) - self.c1) + self.a2 * (np.asarray(alpha2) - self.c2) + self.C

    def __call__(self, b, eps_singular: float = EPS_SINGULAR) -> ConnectionMatrix:
        b = np.asarray(b, dtype=float)
        return a_theta(float(self.theta_of(b[0], b[1])), b, self.params, eps_singular)

    def displacement(self, gait: Gait, steps: int = 6283) -> np.ndarray:
        """Per-cycle world-frame platform displacement predicted by the reduced connection."""
        rates = JointDrivenRates(gait, self.params)
        dt = gait.period / steps

        def f(t, _y):
            u = rates(t)[1]
            b = gait.shape(t)
            th = float(self.theta_of(b[0], b[1]))
            c, s = math.cos(th), math.sin(th)
            return np.array([c * u[0] - s * u[1], s * u[0] + c * u[1]])

        y = np.zeros(2)
        for k in range(steps):
            rates.check_interval(k * dt, (k + 1) * dt)
            y = rk4_step(f, y, k * dt, dt)
        return y


def harmonic_coefficients(fit: FirstHarmonicFit, gait: Gait) -> tuple[float, float]:
    """Solve a1 B1 cos(wt) + a2 B2 cos(wt - phi) = Theta cos(wt - psi) for (a1, a2)."""
    sphi = math.sin(gait.phi)
    if abs(sphi) < 1e-12:
        raise ValueError("sin(phi) = 0: the heading coefficients are undefined for this gait")
    if fit.Theta == 0.0:
        return 0.0, 0.0
    if gait.B1 == 0.0 or gait.B2 == 0.0:
        raise ValueError("gait amplitudes must be non-zero")
    a1 = fit.Theta * math.sin(gait.phi - fit.psi) / (gait.B1 * sphi)
    a2 = fit.Theta * math.sin(fit.psi) / (gait.B2 * sphi)
    return a1, a2


def reduce_theta(
    gait: Gait,
    theta_fit: FirstHarmonicFit,
    params: SnakeParams,
    times: np.ndarray | None = None,
    theta_samples: np.ndarray | None = None,
) -> ReducedThetaConnection:
    """Build the heading-free connection; with samples given, pick the sign branch by residual."""
    a1, a2 = harmonic_coefficients(theta_fit, gait)
    best = ReducedThetaConnection(a1, a2, theta_fit.C, gait.c1, gait.c2, params)
    if times is not None and theta_samples is not None and (a1 or a2):
        b = gait.shape(np.asarray(times))
        flipped = ReducedThetaConnection(-a1, -a2, theta_fit.C, gait.c1, gait.c2, params)
        res = [np.sum((c.theta_of(b[0], b[1]) - theta_samples) ** 2) for c in (best, flipped)]
        if res[1] < res[0]:
            best = flipped
    return best
