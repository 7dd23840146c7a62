import logging
from typing import Optional, Sequence

import numpy as np

from geowarp.core.fields.models import ImageBuffer, MaskField, ScalarField, VectorField
from geowarp.core.geometry import Intrinsics, PoseSE3, rigid_flow

from .config import MaskConfig
from .models import DirectionMasks, MaskSet
from .operations import (
    dynamic_mask,
    flow_correspondence,
    occlusion_mask,
    reconstruction_errors,
)

logger = logging.getLogger(__name__)


def compute_masks(
    images: Sequence[ImageBuffer],
    depth_t: ScalarField,
    pose_f: PoseSE3,
    pose_b: PoseSE3,
    flow_f: VectorField,
    flow_b: VectorField,
    intrinsics: Intrinsics,
    cfg: Optional[MaskConfig] = None,
    use_dynamic_mask: bool = True,
) -> MaskSet:
    """Recompute M_v, M_o and M_d for both directions.

    ``images`` is (I_{t−1}, I_t, I_{t+1}). Occlusion uses the flow
    correspondences; M_d compares the rigid flow of ``depth_t`` with the flow.
    """
    cfg = cfg or MaskConfig()
    image_prev, image_t, image_next = images
    coords_f = flow_correspondence(flow_f)
    coords_b = flow_correspondence(flow_b)
    errors = reconstruction_errors(image_t, image_prev, image_next, coords_b, coords_f)
    occ_f, occ_b = occlusion_mask(errors.backward, errors.forward, cfg)

    rig_f, valid_f = rigid_flow(depth_t, intrinsics, pose_f)
    rig_b, valid_b = rigid_flow(depth_t, intrinsics, pose_b)
    if use_dynamic_mask:
        dyn_f = dynamic_mask(rig_f, flow_f, cfg)
        dyn_b = dynamic_mask(rig_b, flow_b, cfg)
    else:
        dyn_f = dyn_b = MaskField.ones(depth_t.height, depth_t.width)

    masks = MaskSet(
        DirectionMasks(valid_f, occ_f, dyn_f, errors.forward_in_bounds),
        DirectionMasks(valid_b, occ_b, dyn_b, errors.backward_in_bounds),
    )
    counts = masks.kept_counts()
    logger.debug(f"mask kept counts: {counts}")
    if min(counts.values()) == 0:
        logger.warning(f"empty mask after refresh: {counts}")
    return masks


def full_mask_set(height: int, width: int) -> MaskSet:
    ones = MaskField.ones(height, width)
    direction = DirectionMasks(ones, ones, ones, ones)
    return MaskSet(direction, direction)


def mask_agreement(a: MaskField, b: MaskField) -> float:
    return float(np.mean(a.data == b.data))


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    """IoU of the True regions of two boolean arrays."""
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)
