import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from geowarp.config.constants import LossConstants, PhotometricDefaults

TERM_NAMES = LossConstants.TERM_NAMES


class LossWeights(BaseModel):
    """λ vector of the total loss, one nonnegative weight per term."""

    model_config = {"frozen": True, "allow_inf_nan": False}

    ph_d: float = Field(default=1.0, ge=0.0)
    ph_f: float = Field(default=1.0, ge=0.0)
    c_d: float = Field(default=0.0, ge=0.0)
    c_f: float = Field(default=0.0, ge=0.0)
    c_df: float = Field(default=0.0, ge=0.0)
    s_d: float = Field(default=0.0, ge=0.0)
    s_f: float = Field(default=0.0, ge=0.0)
    g: float = Field(default=0.0, ge=0.0)

    @classmethod
    def from_vector(cls, values: List[float]) -> "LossWeights":
        if len(values) != len(TERM_NAMES):
            raise ValueError(f"expected {len(TERM_NAMES)} weights, got {len(values)}")
        return cls(**dict(zip(TERM_NAMES, values)))

    @classmethod
    def for_stage(cls, stage: str) -> "LossWeights":
        if stage not in LossConstants.STAGE_WEIGHTS:
            raise ValueError(f"unknown stage {stage!r}")
        return cls.from_vector(LossConstants.STAGE_WEIGHTS[stage])

    @classmethod
    def only(cls, term: str, weight: float = 1.0) -> "LossWeights":
        values = {name: 0.0 for name in TERM_NAMES}
        values[term] = weight
        return cls(**values)

    def as_vector(self) -> List[float]:
        return [getattr(self, name) for name in TERM_NAMES]

    def active_terms(self) -> List[str]:
        return [name for name in TERM_NAMES if getattr(self, name) > 0.0]


class PhotometricConfig(BaseModel):
    """Photometric β trade-off, edge-aware coefficient and flow-magnitude floor.

    ``edge_ratio`` is the largest max/min depth ratio inside a bilinear cell
    or a pyramid block that the depth terms still treat as one surface.
    """

    model_config = {"frozen": True, "allow_inf_nan": False}

    beta1: float = Field(default=PhotometricDefaults.BETA1.value, ge=0.0, le=1.0)
    beta2: float = Field(default=PhotometricDefaults.BETA2.value, ge=0.0, le=1.0)
    alpha_s: float = Field(default=PhotometricDefaults.ALPHA_S.value, ge=0.0)
    flow_epsilon: float = Field(default=PhotometricDefaults.FLOW_EPSILON.value, gt=0.0)
    edge_ratio: float = Field(default=PhotometricDefaults.DEPTH_EDGE_RATIO.value, gt=1.0)

    @model_validator(mode="after")
    def _betas_sum_to_one(self):
        if abs(self.beta1 + self.beta2 - 1.0) > 1e-12:
            raise ValueError(f"beta1 + beta2 must equal 1, got {self.beta1 + self.beta2}")
        return self


@dataclass
class Gradients:
    """Gradients w.r.t. depth (3, H, W), pose (2, 6) and flow (2, H, W, 2).

    Index 0 of pose/flow is forward (t→t+1), index 1 backward (t→t−1);
    depth frames are ordered (t−1, t, t+1).
    """

    depth: np.ndarray
    pose: np.ndarray
    flow: np.ndarray

    @classmethod
    def zeros(cls, height: int, width: int) -> "Gradients":
        return cls(
            np.zeros((3, height, width)), np.zeros((2, 6)), np.zeros((2, height, width, 2))
        )

    def __add__(self, other: "Gradients") -> "Gradients":
        return Gradients(self.depth + other.depth, self.pose + other.pose, self.flow + other.flow)

    def scaled(self, factor: float) -> "Gradients":
        return Gradients(self.depth * factor, self.pose * factor, self.flow * factor)

    def norm(self) -> float:
        return float(
            np.sqrt(np.sum(self.depth**2) + np.sum(self.pose**2) + np.sum(self.flow**2))
        )

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.depth))
            and np.all(np.isfinite(self.pose))
            and np.all(np.isfinite(self.flow))
        )


@dataclass(frozen=True)
class LossReport:
    """Per-term values, their weighted total and kept-pixel counts."""

    terms: Dict[str, float]
    total: float
    weights: LossWeights
    counts: Dict[str, int] = field(default_factory=dict)
    degenerate: List[str] = field(default_factory=list)
    gradients: Optional[Gradients] = None
    term_gradients: Optional[Dict[str, Gradients]] = None

    def weighted_terms(self) -> Dict[str, float]:
        return {name: getattr(self.weights, name) * self.terms[name] for name in TERM_NAMES}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "terms": dict(self.terms),
            "total": self.total,
            "weights": self.weights.model_dump(),
            "counts": dict(self.counts),
            "degenerate": list(self.degenerate),
        }

    def to_json_line(self) -> str:
        return json.dumps({**self.terms, "total": self.total})
