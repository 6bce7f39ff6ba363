"""Moment-matching model reduction for aperiodically sampled LTI plants."""

__version__ = "0.1.0"

from .systems import (  # noqa: E402
    ContinuousLtiSystem,
    SampledDataSystem,
    SamplingGrid,
    SwitchedLinearSystem,
    is_hurwitz,
    validate,
)
from .discretize import build_switched_model, step_matrices  # noqa: E402
from .pipelines import ReductionRequest, approach_one, approach_two  # noqa: E402

__all__ = [
    "ContinuousLtiSystem",
    "SampledDataSystem",
    "SamplingGrid",
    "SwitchedLinearSystem",
    "ReductionRequest",
    "approach_one",
    "approach_two",
    "build_switched_model",
    "is_hurwitz",
    "step_matrices",
    "validate",
]
