"""
Dot-product attention over forward/backward motion tokens and additive pose correction.
"""

from .models import AttentionConfig, CorrectionHead, FeatureMatrix, MotionDescriptor
from .operations import (
    FusionResult,
    attention_weights,
    pose_correction_fuse,
    scaled_dot_attention,
)

__all__ = [
    "AttentionConfig",
    "FeatureMatrix",
    "MotionDescriptor",
    "CorrectionHead",
    "FusionResult",
    "attention_weights",
    "scaled_dot_attention",
    "pose_correction_fuse",
]
