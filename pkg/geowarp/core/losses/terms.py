"""Individual loss terms with analytic gradients w.r.t. their direct inputs.

Every ``*_value_and_grad`` works on plain arrays and returns the masked-mean
value, the kept-pixel count and the gradients. An empty mask gives value 0,
count 0 and zero gradients.
"""

import logging
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np

from geowarp.core.fields.models import (
    ImageBuffer,
    MaskField,
    ScalarField,
    VectorField,
    require_same_shape,
)
from geowarp.core.fields.operators import (
    second_difference_adjoint,
    second_difference_array,
    ssim_backward,
    ssim_terms,
)

from .models import PhotometricConfig

logger = logging.getLogger(__name__)


class MaskedMean(NamedTuple):
    value: float
    count: int
    weights: np.ndarray  # d(mean)/d(per-pixel value)


def masked_mean(values: np.ndarray, mask: Optional[np.ndarray]) -> MaskedMean:
    keep = np.ones(values.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    count = int(keep.sum())
    if count == 0:
        return MaskedMean(0.0, 0, np.zeros(values.shape))
    weights = keep / count
    return MaskedMean(float(np.sum(values * weights)), count, weights)


# photometric


def photometric_map(
    warped: np.ndarray, target: np.ndarray, cfg: PhotometricConfig
) -> np.ndarray:
    """β₁·|I'−I| + β₂·(1−SSIM)/2 per pixel, channel-averaged."""
    parts = ssim_terms(warped, target)
    l1 = np.abs(warped - target).mean(axis=2)
    dssim = ((1.0 - parts.ssim) / 2.0).mean(axis=2)
    return cfg.beta1 * l1 + cfg.beta2 * dssim


def photometric_value_and_grad(
    warped: np.ndarray,
    target: np.ndarray,
    mask: Optional[np.ndarray],
    cfg: PhotometricConfig,
) -> Tuple[float, int, np.ndarray]:
    """Masked photometric error and its gradient w.r.t. ``warped`` (H, W, C)."""
    channels = warped.shape[2]
    parts = ssim_terms(warped, target)
    l1 = np.abs(warped - target).mean(axis=2)
    dssim = ((1.0 - parts.ssim) / 2.0).mean(axis=2)
    mean = masked_mean(cfg.beta1 * l1 + cfg.beta2 * dssim, mask)
    if mean.count == 0:
        return 0.0, 0, np.zeros_like(warped)
    upstream = np.repeat(mean.weights[..., None], channels, axis=2) / channels
    grad = cfg.beta1 * upstream * np.sign(warped - target)
    grad -= 0.5 * cfg.beta2 * ssim_backward(warped, target, parts, upstream)
    return mean.value, mean.count, grad


def photometric_loss(
    image_t: ImageBuffer,
    image_warped: ImageBuffer,
    mask: MaskField,
    cfg: Optional[PhotometricConfig] = None,
) -> float:
    """Masked mean photometric error; an empty mask gives 0 with a warning."""
    cfg = cfg or PhotometricConfig()
    require_same_shape(image_t.data.shape, image_warped.data.shape, mask.shape)
    values = photometric_map(image_warped.data, image_t.data, cfg)
    mean = masked_mean(values, mask.as_bool())
    if mean.count == 0:
        logger.warning("photometric loss over an empty mask")
    return mean.value


# edge-aware second-order smoothness


def _edge_weights(image: np.ndarray, alpha_s: float) -> Tuple[np.ndarray, np.ndarray]:
    ixx, iyy = second_difference_array(image)
    return (
        np.exp(-alpha_s * np.abs(ixx).mean(axis=2)),
        np.exp(-alpha_s * np.abs(iyy).mean(axis=2)),
    )


def smoothness_value_and_grad(
    field: np.ndarray,
    image: np.ndarray,
    alpha_s: float,
    mask: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray]:
    """Mean of Σ_axis Σ_c |∇²G|·exp(−α_s|∇²I|) and its gradient w.r.t. G.

    ``field`` is (H, W) or (H, W, C); border pixels contribute zeros.
    """
    squeeze = field.ndim == 2
    g = field[..., None] if squeeze else field
    gxx, gyy = second_difference_array(g)
    wx, wy = _edge_weights(image, alpha_s)
    per_pixel = (np.abs(gxx) * wx[..., None] + np.abs(gyy) * wy[..., None]).sum(axis=2)
    mean = masked_mean(per_pixel, mask)
    if mean.count == 0:
        return 0.0, np.zeros_like(field)
    u = mean.weights[..., None]
    grad = second_difference_adjoint(
        u * wx[..., None] * np.sign(gxx), u * wy[..., None] * np.sign(gyy)
    )
    return mean.value, grad[..., 0] if squeeze else grad


def depth_smoothness_value_and_grad(
    depth: np.ndarray,
    image: np.ndarray,
    alpha_s: float,
    mask: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray]:
    """Smoothness of D/mean(D) with the gradient chained back to D."""
    n = depth.size
    mean_depth = depth.mean()
    value, g_norm = smoothness_value_and_grad(depth / mean_depth, image, alpha_s, mask)
    grad = g_norm / mean_depth - np.sum(g_norm * depth) / (mean_depth**2 * n)
    return value, grad


def smoothness_loss(
    field: Union[ScalarField, VectorField],
    image: ImageBuffer,
    alpha_s: Optional[float] = None,
    mask: Optional[MaskField] = None,
) -> float:
    """Edge-aware second-order smoothness; depth fields are mean-normalized first."""
    alpha_s = PhotometricConfig().alpha_s if alpha_s is None else alpha_s
    require_same_shape(field.data.shape, image.data.shape)
    keep = None if mask is None else mask.as_bool()
    if isinstance(field, ScalarField) and field.role == "depth":
        value, _ = depth_smoothness_value_and_grad(field.data, image.data, alpha_s, keep)
    else:
        value, _ = smoothness_value_and_grad(field.data, image.data, alpha_s, keep)
    return value


# depth-flow consistency


def depth_flow_value_and_grad(
    coords_flow: np.ndarray, coords_dp: np.ndarray, mask: Optional[np.ndarray]
) -> Tuple[float, int, np.ndarray, np.ndarray]:
    """Masked mean of |p^f − p^dp|₁; gradients w.r.t. both coordinate fields."""
    diff = coords_flow - coords_dp
    mean = masked_mean(np.abs(diff).sum(axis=-1), mask)
    g = mean.weights[..., None] * np.sign(diff)
    return mean.value, mean.count, g, -g


def depth_flow_consistency(
    coords_flow: VectorField, coords_dp: VectorField, mask: MaskField
) -> float:
    require_same_shape(coords_flow.data.shape, coords_dp.data.shape, mask.shape)
    value, count, _, _ = depth_flow_value_and_grad(
        coords_flow.data, coords_dp.data, mask.as_bool()
    )
    if count == 0:
        logger.warning("depth-flow consistency over an empty mask")
    return value


# depth consistency


def depth_consistency_value_and_grad(
    sampled: np.ndarray, projected: np.ndarray, mask: Optional[np.ndarray]
) -> Tuple[float, int, np.ndarray, np.ndarray]:
    """Masked mean of |a − b|/(a + b); gradients w.r.t. a and b."""
    total = sampled + projected
    keep = np.ones(sampled.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    keep = keep & (total > 0)
    safe = np.where(keep, total, 1.0)
    ratio = (sampled - projected) / safe
    mean = masked_mean(np.abs(ratio), keep)
    s = mean.weights * np.sign(ratio)
    g_a = s * 2.0 * projected / safe**2
    g_b = -s * 2.0 * sampled / safe**2
    return mean.value, mean.count, g_a, g_b


def depth_consistency(
    sampled: ScalarField, projected: ScalarField, mask: MaskField
) -> float:
    require_same_shape(sampled.shape, projected.shape, mask.shape)
    value, count, _, _ = depth_consistency_value_and_grad(
        sampled.data, projected.data, mask.as_bool()
    )
    if count == 0:
        logger.warning("depth consistency over an empty mask")
    return value


# flow-direction consistency


def flow_direction_keep(
    flow_f: np.ndarray, flow_b: np.ndarray, mask: Optional[np.ndarray], epsilon: float
) -> np.ndarray:
    keep = np.ones(flow_f.shape[:2], dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    return (
        keep
        & (np.linalg.norm(flow_f, axis=-1) >= epsilon)
        & (np.linalg.norm(flow_b, axis=-1) >= epsilon)
    )


def _inverse_vector(flow: np.ndarray, keep: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """F/‖F‖² and ‖F‖² (1 where dropped)."""
    sq = np.where(keep, np.sum(flow**2, axis=-1), 1.0)
    return flow / sq[..., None], sq


def _inverse_vector_vjp(flow: np.ndarray, sq: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    # J = I/‖F‖² − 2FFᵀ/‖F‖⁴ is symmetric
    dot = np.sum(flow * upstream, axis=-1)
    return upstream / sq[..., None] - 2.0 * flow * (dot / sq**2)[..., None]


def flow_direction_value_and_grad(
    flow_f: np.ndarray,
    flow_b: np.ndarray,
    mask: Optional[np.ndarray],
    epsilon: float,
) -> Tuple[float, int, np.ndarray, np.ndarray]:
    """Masked mean of |F_f/‖F_f‖² + F_b/‖F_b‖²|₁; pixels under ε are dropped."""
    keep = flow_direction_keep(flow_f, flow_b, mask, epsilon)
    inv_f, sq_f = _inverse_vector(flow_f, keep)
    inv_b, sq_b = _inverse_vector(flow_b, keep)
    total = inv_f + inv_b
    mean = masked_mean(np.abs(total).sum(axis=-1), keep)
    upstream = mean.weights[..., None] * np.sign(total)
    g_f = _inverse_vector_vjp(flow_f, sq_f, upstream)
    g_b = _inverse_vector_vjp(flow_b, sq_b, upstream)
    return mean.value, mean.count, g_f, g_b


def flow_direction_consistency(
    flow_f: VectorField,
    flow_b: VectorField,
    dynamic: MaskField,
    epsilon: Optional[float] = None,
) -> float:
    epsilon = PhotometricConfig().flow_epsilon if epsilon is None else epsilon
    require_same_shape(flow_f.data.shape, flow_b.data.shape, dynamic.shape)
    value, count, _, _ = flow_direction_value_and_grad(
        flow_f.data, flow_b.data, dynamic.as_bool(), epsilon
    )
    if count == 0:
        logger.warning("flow-direction consistency: no pixel above the magnitude floor")
    return value
