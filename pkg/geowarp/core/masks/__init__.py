"""
Validity, occlusion and dynamic-object masks.
"""

from .compute import compute_masks, full_mask_set, mask_agreement, mask_iou
from .config import MaskConfig
from .models import DirectionMasks, MaskSet
from .operations import (
    ReconstructionErrors,
    combine_masks,
    dynamic_mask,
    flow_correspondence,
    occlusion_mask,
    reconstruction_errors,
)

__all__ = [
    "MaskConfig",
    "MaskSet",
    "DirectionMasks",
    "ReconstructionErrors",
    "flow_correspondence",
    "reconstruction_errors",
    "occlusion_mask",
    "dynamic_mask",
    "combine_masks",
    "compute_masks",
    "full_mask_set",
    "mask_agreement",
    "mask_iou",
]
