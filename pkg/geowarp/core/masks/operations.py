"""Correspondences, reconstruction errors and the validity/occlusion/dynamic masks."""

import logging
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from geowarp.core.exceptions import FieldError
from geowarp.core.fields.models import (
    ImageBuffer,
    MaskField,
    ScalarField,
    VectorField,
    pixel_grid,
    require_same_shape,
)
from geowarp.core.fields.sampling import sample_array

from .config import MaskConfig

logger = logging.getLogger(__name__)


class ReconstructionErrors(NamedTuple):
    backward: ScalarField
    forward: ScalarField
    backward_in_bounds: MaskField
    forward_in_bounds: MaskField


def flow_correspondence(flow: VectorField) -> VectorField:
    """Absolute target coordinates p + F(p)."""
    return VectorField(pixel_grid(flow.height, flow.width) + flow.data)


def reconstruction_error_array(
    image: np.ndarray, other: np.ndarray, coords: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Channel-mean |other(coords) − image| and the in-bounds flags."""
    sample = sample_array(other, coords)
    return np.abs(sample.values - image).mean(axis=2), sample.in_bounds


def reconstruction_errors(
    image_t: ImageBuffer,
    image_prev: ImageBuffer,
    image_next: ImageBuffer,
    coords_b: VectorField,
    coords_f: VectorField,
) -> ReconstructionErrors:
    """E_b, E_f of frame t reconstructed from frames t−1 and t+1.

    Out-of-bounds samples read 0; their flags are returned alongside.
    """
    require_same_shape(
        image_t.data.shape,
        image_prev.data.shape,
        image_next.data.shape,
        coords_b.data.shape,
        coords_f.data.shape,
    )
    e_b, in_b = reconstruction_error_array(image_t.data, image_prev.data, coords_b.data)
    e_f, in_f = reconstruction_error_array(image_t.data, image_next.data, coords_f.data)
    return ReconstructionErrors(
        ScalarField(e_b), ScalarField(e_f), MaskField(in_b), MaskField(in_f)
    )


def occlusion_mask_array(
    e_b: np.ndarray, e_f: np.ndarray, delta: float
) -> Tuple[np.ndarray, np.ndarray]:
    # w_f = exp(E_f) / (exp(E_f) + exp(E_b))
    w_f = expit(e_f - e_b)
    w_b = expit(e_b - e_f)
    return w_f <= 1.0 - delta, w_b <= 1.0 - delta


def occlusion_mask(
    e_b: ScalarField, e_f: ScalarField, cfg: Optional[MaskConfig] = None
) -> Tuple[MaskField, MaskField]:
    """(M_o^f, M_o^b): a direction is masked where its softmax weight exceeds 1 − δ."""
    cfg = cfg or MaskConfig()
    require_same_shape(e_b.shape, e_f.shape)
    if e_b.data.min() < 0 or e_f.data.min() < 0:
        raise FieldError("reconstruction errors must be non-negative")
    keep_f, keep_b = occlusion_mask_array(e_b.data, e_f.data, cfg.delta)
    return MaskField(keep_f), MaskField(keep_b)


def dynamic_mask_array(
    f_rig: np.ndarray, f_net: np.ndarray, alpha1: float, alpha2: float
) -> np.ndarray:
    diff = np.sum((f_rig - f_net) ** 2, axis=-1)
    bound = alpha1 * (np.sum(f_rig**2, axis=-1) + np.sum(f_net**2, axis=-1)) + alpha2
    return diff < bound


def dynamic_mask(
    f_rig: VectorField, f_net: VectorField, cfg: Optional[MaskConfig] = None
) -> MaskField:
    """M_d = 1 where rigid and estimated flow agree within the relative threshold."""
    cfg = cfg or MaskConfig()
    require_same_shape(f_rig.data.shape, f_net.data.shape)
    return MaskField(dynamic_mask_array(f_rig.data, f_net.data, cfg.alpha1, cfg.alpha2))


def combine_masks(masks: Sequence[MaskField]) -> MaskField:
    """Pixelwise product."""
    if not masks:
        raise FieldError("combine_masks needs at least one mask")
    require_same_shape(*(m.shape for m in masks))
    out = np.ones(masks[0].shape, dtype=np.uint8)
    for mask in masks:
        out &= mask.data
    return MaskField(out)
