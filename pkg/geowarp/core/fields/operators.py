import logging
from typing import List, NamedTuple, Tuple, Union

import numpy as np
from scipy import ndimage

from geowarp.config.constants import FieldDefaults
from geowarp.core.exceptions import FieldError

from .models import ImageBuffer, ScalarField, VectorField, require_same_shape

logger = logging.getLogger(__name__)

C1 = FieldDefaults.SSIM_C1.value
C2 = FieldDefaults.SSIM_C2.value


# second-order differences


def second_difference_array(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """xx and yy second differences of an (H, W[, C]) array, zero on borders."""
    if a.shape[0] < 3 or a.shape[1] < 3:
        raise FieldError(f"second difference needs at least 3x3, got {a.shape[:2]}")
    dxx = np.zeros_like(a, dtype=np.float64)
    dyy = np.zeros_like(a, dtype=np.float64)
    dxx[:, 1:-1] = a[:, :-2] - 2.0 * a[:, 1:-1] + a[:, 2:]
    dyy[1:-1, :] = a[:-2, :] - 2.0 * a[1:-1, :] + a[2:, :]
    return dxx, dyy


def second_difference_adjoint(gxx: np.ndarray, gyy: np.ndarray) -> np.ndarray:
    """Adjoint of ``second_difference_array``."""
    out = np.zeros_like(gxx, dtype=np.float64)
    gx = gxx[:, 1:-1]
    out[:, :-2] += gx
    out[:, 1:-1] -= 2.0 * gx
    out[:, 2:] += gx
    gy = gyy[1:-1, :]
    out[:-2, :] += gy
    out[1:-1, :] -= 2.0 * gy
    out[2:, :] += gy
    return out


def second_difference(field: Union[ScalarField, VectorField]):
    """Per-pixel (xx, yy) second differences of a scalar or vector field."""
    return second_difference_array(field.data)


# 3x3 box filter with mirror padding


def box_filter3(a: np.ndarray) -> np.ndarray:
    """3x3 spatial mean of an (H, W, C) array, mirror-padded."""
    return ndimage.uniform_filter(a, size=(3, 3, 1), mode="mirror")


def _fold_mirror(padded: np.ndarray, axis: int) -> np.ndarray:
    """Adjoint of a one-pixel mirror pad along ``axis``."""
    padded = np.moveaxis(padded, axis, 0)
    inner = padded[1:-1].copy()
    inner[1] += padded[0]
    inner[-2] += padded[-1]
    return np.moveaxis(inner, 0, axis)


def box_filter3_adjoint(g: np.ndarray) -> np.ndarray:
    """Adjoint of ``box_filter3``."""
    height, width = g.shape[:2]
    padded = np.zeros((height + 2, width + 2) + g.shape[2:])
    for dy in range(3):
        for dx in range(3):
            padded[dy : dy + height, dx : dx + width] += g
    padded /= 9.0
    return _fold_mirror(_fold_mirror(padded, 0), 1)


# SSIM


class SsimParts(NamedTuple):
    ssim: np.ndarray
    mu_a: np.ndarray
    mu_b: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray


def ssim_terms(a: np.ndarray, b: np.ndarray) -> SsimParts:
    """Per-channel SSIM of two (H, W, C) arrays over 3x3 mirror-padded windows."""
    if a.shape != b.shape:
        raise FieldError(f"dimension mismatch: {a.shape} vs {b.shape}")
    mu_a = box_filter3(a)
    mu_b = box_filter3(b)
    sigma_a = box_filter3(a * a) - mu_a * mu_a
    sigma_b = box_filter3(b * b) - mu_b * mu_b
    sigma_ab = box_filter3(a * b) - mu_a * mu_b
    a1 = 2.0 * mu_a * mu_b + C1
    a2 = 2.0 * sigma_ab + C2
    b1 = mu_a * mu_a + mu_b * mu_b + C1
    b2 = sigma_a + sigma_b + C2
    return SsimParts((a1 * a2) / (b1 * b2), mu_a, mu_b, a1, a2, b1, b2)


def ssim_backward(
    a: np.ndarray, b: np.ndarray, parts: SsimParts, upstream: np.ndarray
) -> np.ndarray:
    """Gradient w.r.t. ``a`` of sum(upstream * ssim)."""
    s = parts.ssim * upstream
    g_mu = s * (
        2.0 * parts.mu_b / parts.a1
        - 2.0 * parts.mu_b / parts.a2
        - 2.0 * parts.mu_a / parts.b1
        + 2.0 * parts.mu_a / parts.b2
    )
    g_aa = -s / parts.b2
    g_ab = 2.0 * s / parts.a2
    return (
        box_filter3_adjoint(g_mu)
        + 2.0 * a * box_filter3_adjoint(g_aa)
        + b * box_filter3_adjoint(g_ab)
    )


def ssim_map(a: ImageBuffer, b: ImageBuffer) -> ScalarField:
    """Per-pixel SSIM, averaged over channels."""
    require_same_shape(a.data.shape, b.data.shape)
    if a.channels != b.channels:
        raise FieldError(f"channel mismatch: {a.channels} vs {b.channels}")
    parts = ssim_terms(a.data, b.data)
    return ScalarField(parts.ssim.mean(axis=2), role="weight")


# pyramid


def _crop_even(a: np.ndarray) -> np.ndarray:
    return a[: a.shape[0] // 2 * 2, : a.shape[1] // 2 * 2]


def downsample(a: np.ndarray) -> np.ndarray:
    """2x2 area average; an odd trailing row/column is dropped."""
    a = _crop_even(np.asarray(a, dtype=np.float64))
    return 0.25 * (a[0::2, 0::2] + a[1::2, 0::2] + a[0::2, 1::2] + a[1::2, 1::2])


def downsample_adjoint(g: np.ndarray, fine_shape: Tuple[int, ...]) -> np.ndarray:
    out = np.zeros(fine_shape)
    up = 0.25 * np.repeat(np.repeat(g, 2, axis=0), 2, axis=1)
    out[: up.shape[0], : up.shape[1]] = up
    return out


def downsample_mask(mask: np.ndarray) -> np.ndarray:
    """A coarse pixel is kept only if all four fine pixels are kept."""
    m = _crop_even(np.asarray(mask, dtype=np.uint8))
    return m[0::2, 0::2] & m[1::2, 0::2] & m[0::2, 1::2] & m[1::2, 1::2]


def ssim_support(mask: np.ndarray) -> np.ndarray:
    """Pixels of ``mask`` whose whole SSIM window lies inside ``mask``.

    The image border does not shrink the support: mirror padding only reads
    pixels that are already in the window.
    """
    window = FieldDefaults.SSIM_WINDOW.value
    return ndimage.binary_erosion(
        np.asarray(mask, dtype=bool),
        structure=np.ones((window, window), dtype=bool),
        border_value=1,
    )


def block_ratio(depth: np.ndarray) -> np.ndarray:
    """max/min of every 2x2 block of a positive map, on the coarse grid."""
    d = _crop_even(np.asarray(depth, dtype=np.float64))
    blocks = np.stack([d[0::2, 0::2], d[1::2, 0::2], d[0::2, 1::2], d[1::2, 1::2]])
    low = blocks.min(axis=0)
    safe = np.where(low > 0, low, 1.0)
    return np.where(low > 0, blocks.max(axis=0) / safe, np.inf)


def pyramid_levels(height: int, width: int, requested: int) -> int:
    """Number of usable levels: the coarsest side stays >= MIN_PYRAMID_SIDE."""
    min_side = FieldDefaults.MIN_PYRAMID_SIDE.value
    levels = 0
    h, w = height, width
    while levels < requested and min(h, w) >= min_side:
        levels += 1
        h, w = h // 2, w // 2
    if levels < requested:
        logger.warning(
            f"pyramid capped at {levels} levels for {height}x{width} (requested {requested})"
        )
    return max(levels, 1)


def build_pyramid(a: np.ndarray, levels: int) -> List[np.ndarray]:
    out = [np.asarray(a, dtype=np.float64)]
    for _ in range(levels - 1):
        out.append(downsample(out[-1]))
    return out
