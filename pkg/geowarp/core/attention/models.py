from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from geowarp.core.exceptions import FieldError

POSE_DIM = 6


def _finite_matrix(data, name: str, ndim: int = 2) -> np.ndarray:
    array = np.array(data, dtype=np.float64)
    if array.ndim != ndim:
        raise FieldError(f"{name} must be {ndim}-D, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise FieldError(f"{name} contains non-finite values")
    array.setflags(write=False)
    return array


class AttentionConfig(BaseModel):
    """Toy dimensions of the motion-attention block."""

    model_config = {"frozen": True, "allow_inf_nan": False}

    descriptor_dim: int = Field(default=16, ge=1)
    d_k: int = Field(default=16, ge=1)
    d_v: int = Field(default=16, ge=1)


@dataclass(frozen=True)
class FeatureMatrix:
    """Token-by-feature matrix (rows ≥ 1, cols ≥ 1, finite)."""

    data: np.ndarray

    def __post_init__(self):
        array = _finite_matrix(self.data, "FeatureMatrix")
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise FieldError(f"FeatureMatrix needs at least one row and column, got {array.shape}")
        object.__setattr__(self, "data", array)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class MotionDescriptor:
    """Forward/backward motion features and the Q, K, V projections.

    Projections are d × d_k, d × d_k and d × d_v.
    """

    forward: np.ndarray
    backward: np.ndarray
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray

    def __post_init__(self):
        forward = _finite_matrix(self.forward, "forward descriptor", ndim=1)
        backward = _finite_matrix(self.backward, "backward descriptor", ndim=1)
        if forward.shape != backward.shape:
            raise FieldError(f"dimension mismatch: {forward.shape} vs {backward.shape}")
        dim = forward.shape[0]
        projections = {}
        for name in ("w_q", "w_k", "w_v"):
            matrix = _finite_matrix(getattr(self, name), name)
            if matrix.shape[0] != dim:
                raise FieldError(f"{name} must have {dim} rows, got {matrix.shape}")
            projections[name] = matrix
        if projections["w_q"].shape[1] != projections["w_k"].shape[1]:
            raise FieldError("w_q and w_k must project to the same d_k")
        for name, value in (("forward", forward), ("backward", backward), *projections.items()):
            object.__setattr__(self, name, value)

    @property
    def tokens(self) -> np.ndarray:
        """(2, d): forward token first."""
        return np.stack([self.forward, self.backward])

    @property
    def d_k(self) -> int:
        return self.w_q.shape[1]

    @property
    def d_v(self) -> int:
        return self.w_v.shape[1]

    def swapped(self) -> "MotionDescriptor":
        return MotionDescriptor(self.backward, self.forward, self.w_q, self.w_k, self.w_v)

    @classmethod
    def random(cls, cfg: Optional[AttentionConfig] = None, seed: int = 0) -> "MotionDescriptor":
        cfg = cfg or AttentionConfig()
        rng = np.random.default_rng(seed)
        d = cfg.descriptor_dim
        scale = 1.0 / np.sqrt(d)
        return cls(
            forward=rng.standard_normal(d),
            backward=rng.standard_normal(d),
            w_q=scale * rng.standard_normal((d, cfg.d_k)),
            w_k=scale * rng.standard_normal((d, cfg.d_k)),
            w_v=scale * rng.standard_normal((d, cfg.d_v)),
        )


@dataclass(frozen=True)
class CorrectionHead:
    """Output map from an attended token (d_v) to a 6-vector pose correction."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        weight = _finite_matrix(self.weight, "correction weight")
        bias = _finite_matrix(self.bias, "correction bias", ndim=1)
        if weight.shape[1] != POSE_DIM or bias.shape != (POSE_DIM,):
            raise FieldError(f"correction head must map to {POSE_DIM} outputs")
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "bias", bias)

    @classmethod
    def zeros(cls, d_v: int) -> "CorrectionHead":
        return cls(np.zeros((d_v, POSE_DIM)), np.zeros(POSE_DIM))

    @classmethod
    def random(cls, d_v: int, seed: int = 0, scale: float = 1e-2) -> "CorrectionHead":
        rng = np.random.default_rng(seed)
        return cls(
            scale * rng.standard_normal((d_v, POSE_DIM)), scale * rng.standard_normal(POSE_DIM)
        )
