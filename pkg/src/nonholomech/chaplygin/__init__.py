"""Chaplygin beanie with a spring-coupled rotor on a movable platform."""

from .model import (
    BeanieFullState,
    BeanieParams,
    DerivedConstants,
    MomentumSet,
    ReducedState,
    control_body_frame,
    derived_constants,
    frequencies,
    momenta_from_state,
    reduced_rhs,
    stability_polynomial_roots,
)
from .simulate import BodyFrameControl, PrescribedVelocity, mean_jlt_metric, simulate_forced, simulate_passive

__all__ = [
    "BeanieFullState", "BeanieParams", "BodyFrameControl", "DerivedConstants", "MomentumSet", "PrescribedVelocity",
    "ReducedState", "control_body_frame", "derived_constants", "frequencies", "mean_jlt_metric",
    "momenta_from_state", "reduced_rhs", "simulate_forced", "simulate_passive", "stability_polynomial_roots",
]
