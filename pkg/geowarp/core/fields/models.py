from dataclasses import dataclass
from typing import Tuple

import numpy as np

from geowarp.config.constants import FieldDefaults
from geowarp.core.exceptions import FieldError

SCALAR_ROLES = ("depth", "error", "weight", "measurement")


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _require_finite(array: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(array)):
        raise FieldError(f"{name} contains non-finite values")


@dataclass(frozen=True)
class ImageBuffer:
    """Intensity image, (H, W, C) with C in {1, 3} and values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        array = np.array(self.data, dtype=np.float64)
        if array.ndim == 2:
            array = array[..., None]
        if array.ndim != 3 or array.shape[2] not in (1, 3):
            raise FieldError(
                f"ImageBuffer expects (H, W, 1|3) data, got shape {array.shape}"
            )
        _require_finite(array, "ImageBuffer")
        if array.size and (array.min() < 0.0 or array.max() > 1.0):
            raise FieldError("ImageBuffer values must lie in [0, 1]")
        object.__setattr__(self, "data", _readonly(array))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape[:2]


@dataclass(frozen=True)
class ScalarField:
    """One real per pixel, tagged with its role.

    ``measurement`` holds sparse ground truth where 0 marks a missing value.
    """

    data: np.ndarray
    role: str = "error"
    min_depth: float = FieldDefaults.MIN_DEPTH.value

    def __post_init__(self):
        array = np.array(self.data, dtype=np.float64)
        if array.ndim != 2:
            raise FieldError(f"ScalarField expects (H, W) data, got {array.shape}")
        if self.role not in SCALAR_ROLES:
            raise FieldError(f"Unknown ScalarField role: {self.role}")
        _require_finite(array, "ScalarField")
        if self.role == "depth" and array.size and array.min() < self.min_depth:
            raise FieldError(
                f"depth below min_depth={self.min_depth}: {array.min():.3g}"
            )
        object.__setattr__(self, "data", _readonly(array))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class VectorField:
    """2-vector per pixel in pixels: u right-positive, v down-positive."""

    data: np.ndarray

    def __post_init__(self):
        array = np.array(self.data, dtype=np.float64)
        if array.ndim != 3 or array.shape[2] != 2:
            raise FieldError(f"VectorField expects (H, W, 2) data, got {array.shape}")
        _require_finite(array, "VectorField")
        object.__setattr__(self, "data", _readonly(array))

    @classmethod
    def zeros(cls, height: int, width: int) -> "VectorField":
        return cls(np.zeros((height, width, 2)))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape[:2]


@dataclass(frozen=True)
class MaskField:
    """Per-pixel keep (1) / exclude (0) flags."""

    data: np.ndarray

    def __post_init__(self):
        array = np.asarray(self.data)
        if array.ndim != 2:
            raise FieldError(f"MaskField expects (H, W) data, got {array.shape}")
        if array.dtype != bool and not np.all((array == 0) | (array == 1)):
            raise FieldError("MaskField values must be exactly 0 or 1")
        object.__setattr__(self, "data", _readonly(array.astype(np.uint8)))

    @classmethod
    def ones(cls, height: int, width: int) -> "MaskField":
        return cls(np.ones((height, width), dtype=np.uint8))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def kept(self) -> int:
        return int(self.data.sum())

    def as_bool(self) -> np.ndarray:
        return self.data.astype(bool)


def pixel_grid(height: int, width: int) -> np.ndarray:
    """Integer pixel centres as an (H, W, 2) array of (u, v)."""
    v, u = np.mgrid[0:height, 0:width].astype(np.float64)
    return np.stack([u, v], axis=-1)


def field_array(field) -> np.ndarray:
    """Raw array of any field type, with a channel axis for images."""
    if isinstance(field, (ImageBuffer, ScalarField, VectorField, MaskField)):
        return field.data
    return np.asarray(field, dtype=np.float64)


def require_same_shape(*shapes: Tuple[int, ...]) -> None:
    first = tuple(shapes[0][:2])
    for shape in shapes[1:]:
        if tuple(shape[:2]) != first:
            raise FieldError(f"dimension mismatch: {first} vs {tuple(shape[:2])}")
