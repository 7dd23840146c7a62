"""Bilinear sampling with analytic coordinate derivatives and its adjoint."""

from typing import NamedTuple, Union

import numpy as np

from geowarp.core.exceptions import FieldError

from .models import ImageBuffer, MaskField, ScalarField, VectorField

Sampleable = Union[ImageBuffer, ScalarField, VectorField]


class BilinearSample(NamedTuple):
    values: np.ndarray  # (H, W, C)
    in_bounds: np.ndarray  # (H, W) bool
    d_dx: np.ndarray  # (H, W, C)
    d_dy: np.ndarray  # (H, W, C)


class _Cells(NamedTuple):
    x0: np.ndarray
    y0: np.ndarray
    fx: np.ndarray
    fy: np.ndarray
    in_bounds: np.ndarray


def _cells(src_height: int, src_width: int, coords: np.ndarray) -> _Cells:
    if src_height < 2 or src_width < 2:
        raise FieldError("bilinear sampling needs a source of at least 2x2")
    if coords.ndim != 3 or coords.shape[2] != 2:
        raise FieldError(f"coords must be (H, W, 2), got {coords.shape}")
    if not np.all(np.isfinite(coords)):
        raise FieldError("coords contain non-finite values")
    x = coords[..., 0]
    y = coords[..., 1]
    in_bounds = (x >= 0) & (x <= src_width - 1) & (y >= 0) & (y <= src_height - 1)
    xc = np.where(in_bounds, x, 0.0)
    yc = np.where(in_bounds, y, 0.0)
    # the last column/row uses the cell to its left/above, fx = 1
    x0 = np.clip(np.floor(xc), 0, src_width - 2).astype(np.intp)
    y0 = np.clip(np.floor(yc), 0, src_height - 2).astype(np.intp)
    return _Cells(x0, y0, xc - x0, yc - y0, in_bounds)


def _as_channels(src: np.ndarray) -> np.ndarray:
    return src[..., None] if src.ndim == 2 else src


def sample_array(src: np.ndarray, coords: np.ndarray) -> BilinearSample:
    """Sample an (Hs, Ws[, C]) array at absolute (u, v) positions.

    Out-of-bounds positions return 0 with in_bounds False. Derivatives at
    integer lines are the one-sided values of the cell to the right/below.
    """
    src = _as_channels(np.asarray(src, dtype=np.float64))
    if coords.shape[:2] != src.shape[:2]:
        raise FieldError(
            f"dimension mismatch: source {src.shape[:2]} vs coords {coords.shape[:2]}"
        )
    cells = _cells(src.shape[0], src.shape[1], coords)
    x0, y0 = cells.x0, cells.y0
    fx = cells.fx[..., None]
    fy = cells.fy[..., None]
    i00 = src[y0, x0]
    i01 = src[y0, x0 + 1]
    i10 = src[y0 + 1, x0]
    i11 = src[y0 + 1, x0 + 1]
    top = (1.0 - fx) * i00 + fx * i01
    bottom = (1.0 - fx) * i10 + fx * i11
    values = (1.0 - fy) * top + fy * bottom
    d_dx = (1.0 - fy) * (i01 - i00) + fy * (i11 - i10)
    d_dy = bottom - top
    keep = cells.in_bounds[..., None]
    return BilinearSample(
        values=np.where(keep, values, 0.0),
        in_bounds=cells.in_bounds,
        d_dx=np.where(keep, d_dx, 0.0),
        d_dy=np.where(keep, d_dy, 0.0),
    )


def cell_ratio(src: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """max/min of the four corners of the bilinear cell read at each position.

    Out-of-bounds positions give 1; cells with a nonpositive corner give inf.
    """
    src = np.asarray(src, dtype=np.float64)
    cells = _cells(src.shape[0], src.shape[1], coords)
    x0, y0 = cells.x0, cells.y0
    corners = np.stack([src[y0, x0], src[y0, x0 + 1], src[y0 + 1, x0], src[y0 + 1, x0 + 1]])
    low = corners.min(axis=0)
    with np.errstate(invalid="ignore"):
        ratio = corners.max(axis=0) / np.where(low > 0, low, 1.0)
    ratio = np.where((low > 0) & np.isfinite(low), ratio, np.inf)
    return np.where(cells.in_bounds, ratio, 1.0)


def sample_array_adjoint(
    grad_values: np.ndarray, coords: np.ndarray, src_shape
) -> np.ndarray:
    """Scatter d(loss)/d(sampled values) back onto the source grid."""
    grad_values = _as_channels(np.asarray(grad_values, dtype=np.float64))
    height, width = src_shape[0], src_shape[1]
    cells = _cells(height, width, coords)
    out = np.zeros((height, width, grad_values.shape[2]))
    g = np.where(cells.in_bounds[..., None], grad_values, 0.0)
    fx = cells.fx[..., None]
    fy = cells.fy[..., None]
    x0, y0 = cells.x0, cells.y0
    np.add.at(out, (y0, x0), (1.0 - fx) * (1.0 - fy) * g)
    np.add.at(out, (y0, x0 + 1), fx * (1.0 - fy) * g)
    np.add.at(out, (y0 + 1, x0), (1.0 - fx) * fy * g)
    np.add.at(out, (y0 + 1, x0 + 1), fx * fy * g)
    return out.reshape(tuple(src_shape)) if len(src_shape) == 2 else out


def bilinear_sample(src: Sampleable, coords: VectorField):
    """Sample a field at absolute positions.

    Returns the sampled field (same type as ``src``) and the in-bounds mask.
    """
    sample = sample_array(src.data, coords.data)
    in_bounds = MaskField(sample.in_bounds)
    if isinstance(src, ImageBuffer):
        return ImageBuffer(np.clip(sample.values, 0.0, 1.0)), in_bounds
    if isinstance(src, ScalarField):
        role = "error" if src.role == "depth" else src.role
        return ScalarField(sample.values[..., 0], role=role), in_bounds
    if isinstance(src, VectorField):
        return VectorField(sample.values), in_bounds
    raise FieldError(f"cannot sample {type(src).__name__}")


def bilinear_sample_with_gradient(src: Sampleable, coords: VectorField):
    """Sample plus the analytic partials w.r.t. the u and v coordinates."""
    return sample_array(src.data, coords.data)
