"""Three-link wheeled snake coupled to a platform through momentum conservation."""

from .fields import FieldGrid, GridSpec, StokesEstimate, exterior_derivative_field, gait_displacement_stokes, gait_line_integral
from .kinematics import (
    ConnectionMatrix,
    Gait,
    NonInvertible,
    Shape,
    SingularShape,
    SnakeParams,
    a_ext,
    a_int,
    a_theta,
    constraint_residual,
    invert_external,
    link_poses,
)
from .reduction import ReducedThetaConnection, reduce_theta
from .simulate import simulate_snake_joint_driven, simulate_snake_platform_driven

__all__ = [
    "ConnectionMatrix", "FieldGrid", "Gait", "GridSpec", "NonInvertible", "ReducedThetaConnection", "Shape",
    "SingularShape", "SnakeParams", "StokesEstimate", "a_ext", "a_int", "a_theta", "constraint_residual",
    "exterior_derivative_field", "gait_displacement_stokes", "gait_line_integral", "invert_external", "link_poses",
    "reduce_theta", "simulate_snake_joint_driven", "simulate_snake_platform_driven",
]
