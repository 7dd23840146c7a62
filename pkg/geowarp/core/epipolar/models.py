from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, Field

from geowarp.config.constants import RansacDefaults
from geowarp.core.exceptions import EstimationError, FieldError

RANK_TOLERANCE = 1e-8


def canonicalize(matrix: np.ndarray) -> np.ndarray:
    """Unit Frobenius norm, sign fixed so the largest-|·| entry is positive."""
    matrix = np.asarray(matrix, dtype=np.float64)
    norm = np.linalg.norm(matrix)
    if norm == 0 or not np.isfinite(norm):
        raise EstimationError("cannot canonicalize a zero or non-finite matrix")
    out = matrix / norm
    if out.flat[np.argmax(np.abs(out))] < 0:
        out = -out
    return out


def enforce_rank2(matrix: np.ndarray) -> np.ndarray:
    u, s, vt = np.linalg.svd(matrix)
    s[2] = 0.0
    return u @ np.diag(s) @ vt


@dataclass(frozen=True)
class FundamentalMatrix:
    """Canonicalized rank-2 fundamental matrix with p'ᵀ F p = 0."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64)
        if matrix.shape != (3, 3) or not np.all(np.isfinite(matrix)):
            raise EstimationError(f"invalid fundamental matrix of shape {matrix.shape}")
        if abs(np.linalg.norm(matrix) - 1.0) > 1e-9:
            raise EstimationError("fundamental matrix is not canonicalized")
        if np.linalg.svd(matrix, compute_uv=False)[2] >= RANK_TOLERANCE:
            raise EstimationError("fundamental matrix is not rank 2")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_raw(cls, matrix: np.ndarray, enforce_rank: bool = True) -> "FundamentalMatrix":
        matrix = np.asarray(matrix, dtype=np.float64)
        if enforce_rank:
            matrix = enforce_rank2(canonicalize(matrix))
        return cls(canonicalize(matrix))

    def algebraic_residuals(self, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
        """p'ᵀ F p for each pair, in pixels."""
        p = np.column_stack([src, np.ones(len(src))])
        q = np.column_stack([dst, np.ones(len(dst))])
        return np.einsum("ni,ij,nj->n", q, self.matrix, p)

    def to_dict(self) -> Dict[str, list]:
        return {"matrix": self.matrix.tolist()}


@dataclass(frozen=True)
class CorrespondenceSet:
    """Pixel pairs (p in frame t, p' in the other frame)."""

    src: np.ndarray
    dst: np.ndarray
    pixel_index: Optional[np.ndarray] = field(default=None)
    provenance: str = "flow"

    def __post_init__(self):
        src = np.array(self.src, dtype=np.float64).reshape(-1, 2)
        dst = np.array(self.dst, dtype=np.float64).reshape(-1, 2)
        if src.shape != dst.shape:
            raise FieldError(f"dimension mismatch: {src.shape} vs {dst.shape}")
        if not (np.all(np.isfinite(src)) and np.all(np.isfinite(dst))):
            raise FieldError("correspondences contain non-finite coordinates")
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)

    def __len__(self) -> int:
        return len(self.src)

    def subset(self, index: np.ndarray) -> "CorrespondenceSet":
        pixel_index = None if self.pixel_index is None else self.pixel_index[index]
        return CorrespondenceSet(self.src[index], self.dst[index], pixel_index, self.provenance)


class RansacConfig(BaseModel):
    """RANSAC settings; the Sampson threshold is in Hartley-normalized units."""

    model_config = {"frozen": True, "allow_inf_nan": False}

    max_iterations: int = Field(default=RansacDefaults.MAX_ITERATIONS.value, gt=0)
    sampson_threshold: float = Field(default=RansacDefaults.SAMPSON_THRESHOLD.value, gt=0.0)
    min_inlier_fraction: float = Field(
        default=RansacDefaults.MIN_INLIER_FRACTION.value, gt=0.0, le=1.0
    )
    confidence: float = Field(default=RansacDefaults.CONFIDENCE.value, gt=0.0, le=1.0)
    seed: int = Field(default=RansacDefaults.SEED.value, ge=0)
    sample_count: int = Field(default=RansacDefaults.SAMPLE_COUNT.value, ge=8)
