"""
Fundamental-matrix machinery: F from pose, eight-point + RANSAC, epipolar loss.
"""

from .estimation import (
    eight_point,
    estimate_from_flow,
    fundamental_from_pose,
    hartley_transform,
    ransac_fundamental,
    sample_correspondences,
    sampson_errors,
)
from .io import read_fundamental_text, write_correspondences_text, write_fundamental_text
from .loss import epipolar_loss, epipolar_value_and_grad
from .models import (
    CorrespondenceSet,
    FundamentalMatrix,
    RansacConfig,
    canonicalize,
    enforce_rank2,
)

__all__ = [
    "FundamentalMatrix",
    "CorrespondenceSet",
    "RansacConfig",
    "canonicalize",
    "enforce_rank2",
    "fundamental_from_pose",
    "hartley_transform",
    "eight_point",
    "estimate_from_flow",
    "sampson_errors",
    "ransac_fundamental",
    "sample_correspondences",
    "epipolar_loss",
    "epipolar_value_and_grad",
    "write_fundamental_text",
    "read_fundamental_text",
    "write_correspondences_text",
]
