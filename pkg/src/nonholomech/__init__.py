"""Simulation tools for nonholonomic robots riding on a movable platform."""

from .se2 import (
    BodyVelocity,
    FirstHarmonicFit,
    GroupElementSE2,
    IntegrationError,
    Trajectory,
    fit_first_harmonic,
    left_lift,
    reconstruct,
    rk4_step,
)

__version__ = "0.1.0"

__all__ = [
    "BodyVelocity",
    "FirstHarmonicFit",
    "GroupElementSE2",
    "IntegrationError",
    "Trajectory",
    "fit_first_harmonic",
    "left_lift",
    "reconstruct",
    "rk4_step",
]
