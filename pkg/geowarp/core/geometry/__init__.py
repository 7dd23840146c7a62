"""
Pinhole camera model and SE(3) motion.
"""

from .models import Intrinsics, PoseSE3, nearest_rotation, orthonormality_error
from .projection import (
    FieldReprojection,
    backproject,
    project,
    projected_depth,
    reproject,
    reproject_field,
    rigid_flow,
)
from .so3 import rotation_derivatives, skew

__all__ = [
    "Intrinsics",
    "PoseSE3",
    "nearest_rotation",
    "orthonormality_error",
    "FieldReprojection",
    "backproject",
    "project",
    "reproject",
    "reproject_field",
    "rigid_flow",
    "projected_depth",
    "rotation_derivatives",
    "skew",
]
