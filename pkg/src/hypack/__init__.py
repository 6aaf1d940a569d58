"""Linear-programming packing bounds in hyperbolic and Euclidean space."""

from .errors import (
    ContractViolationError,
    HypackError,
    InvalidInputError,
    NumericalAccuracyError,
    OptimizationFailedError,
    ResourceLimitError,
)
from .geometry import Space, ball_volume, distance, sample_uniform_ball, sphere_area

__version__ = "0.1.0"

__all__ = [
    "Space",
    "ball_volume",
    "distance",
    "sample_uniform_ball",
    "sphere_area",
    "HypackError",
    "InvalidInputError",
    "NumericalAccuracyError",
    "ContractViolationError",
    "ResourceLimitError",
    "OptimizationFailedError",
]
