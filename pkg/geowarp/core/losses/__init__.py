"""
Photometric, smoothness, consistency and epipolar losses with analytic gradients.
"""

from .gradcheck import GradientCheckEntry, GradientCheckReport, gradient_check, relative_error
from .models import Gradients, LossReport, LossWeights, PhotometricConfig
from .terms import (
    depth_consistency,
    depth_flow_consistency,
    flow_direction_consistency,
    masked_mean,
    photometric_loss,
    smoothness_loss,
)
from .total import (
    DIRECTION_INDEX,
    DIRECTIONS,
    LossInputs,
    LossVariables,
    gradients,
    structure_maps,
    total_loss,
)

__all__ = [
    "LossWeights",
    "PhotometricConfig",
    "Gradients",
    "LossReport",
    "masked_mean",
    "photometric_loss",
    "smoothness_loss",
    "depth_flow_consistency",
    "depth_consistency",
    "flow_direction_consistency",
    "DIRECTIONS",
    "DIRECTION_INDEX",
    "LossInputs",
    "LossVariables",
    "total_loss",
    "gradients",
    "structure_maps",
    "gradient_check",
    "GradientCheckEntry",
    "GradientCheckReport",
    "relative_error",
]
