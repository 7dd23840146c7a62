import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from geowarp.config.constants import FieldDefaults, OptimizerDefaults
from geowarp.core.attention import AttentionConfig
from geowarp.core.epipolar.models import RansacConfig
from geowarp.core.exceptions import FieldError
from geowarp.core.losses.models import TERM_NAMES, LossReport, LossWeights, PhotometricConfig
from geowarp.core.losses.total import LossVariables
from geowarp.core.masks.config import MaskConfig

logger = logging.getLogger(__name__)

GROUPS = ("depth", "pose", "flow")
MIN_LOG_DEPTH = float(np.log(FieldDefaults.MIN_DEPTH.value))


class StageSpec(BaseModel):
    """One training stage: λ vector, iteration count and step sizes.

    When ``final_step_size`` is set the step drops to it at the halfway point.
    """

    model_config = {"frozen": True, "allow_inf_nan": False}

    name: str
    weights: LossWeights
    iterations: int = Field(gt=0)
    step_size: float = Field(default=OptimizerDefaults.STEP_SIZE.value, gt=0.0)
    final_step_size: Optional[float] = Field(default=None, gt=0.0)
    use_dynamic_mask: bool = True

    def step_at(self, iteration: int) -> float:
        if self.final_step_size is not None and iteration >= self.iterations // 2:
            return self.final_step_size
        return self.step_size


class StageSchedule(BaseModel):
    model_config = {"frozen": True}

    stages: List[StageSpec]

    @field_validator("stages")
    @classmethod
    def _nonempty(cls, value: List[StageSpec]) -> List[StageSpec]:
        if not value:
            raise ValueError("a schedule needs at least one stage")
        return value

    @property
    def total_iterations(self) -> int:
        return sum(stage.iterations for stage in self.stages)

    @property
    def names(self) -> List[str]:
        return [stage.name for stage in self.stages]


class OptimizerConfig(BaseModel):
    """Adam moments, per-group step multipliers, refresh period and loss settings.

    With ``attention`` on, the pose fed to the loss is the base pose plus the
    correction of a motion-attention block whose parameters train with the pose
    group at ``attention_step_scale``.
    """

    model_config = {"frozen": True, "allow_inf_nan": False}

    beta1: float = Field(default=OptimizerDefaults.BETA1.value, ge=0.0, lt=1.0)
    beta2: float = Field(default=OptimizerDefaults.BETA2.value, ge=0.0, lt=1.0)
    epsilon: float = Field(default=OptimizerDefaults.EPSILON.value, gt=0.0)
    mask_refresh: int = Field(default=OptimizerDefaults.MASK_REFRESH.value, gt=0)
    num_scales: int = Field(default=OptimizerDefaults.NUM_SCALES.value, ge=1)
    log_depth_step_scale: float = Field(
        default=OptimizerDefaults.LOG_DEPTH_STEP_SCALE.value, gt=0.0
    )
    pose_step_scale: float = Field(default=OptimizerDefaults.POSE_STEP_SCALE.value, gt=0.0)
    flow_step_scale: float = Field(default=OptimizerDefaults.FLOW_STEP_SCALE.value, gt=0.0)
    attention_step_scale: float = Field(
        default=OptimizerDefaults.ATTENTION_STEP_SCALE.value, gt=0.0
    )
    trainable: Tuple[str, ...] = GROUPS
    attention: bool = False
    attention_config: AttentionConfig = Field(default_factory=AttentionConfig)
    masks: MaskConfig = Field(default_factory=MaskConfig)
    photometric: PhotometricConfig = Field(default_factory=PhotometricConfig)
    ransac: RansacConfig = Field(default_factory=RansacConfig)

    @model_validator(mode="after")
    def _known_groups(self):
        unknown = set(self.trainable) - set(GROUPS)
        if unknown or not self.trainable:
            raise ValueError(
                f"trainable must be a nonempty subset of {GROUPS}, got {self.trainable}"
            )
        return self

    def step_scale(self, group: str) -> float:
        return {
            "depth": self.log_depth_step_scale,
            "pose": self.pose_step_scale,
            "flow": self.flow_step_scale,
        }[group]


@dataclass
class VariableSet:
    """Log-depth (3, H, W) for (t−1, t, t+1), pose (2, 6) as (ω, t) and flow (2, H, W, 2)."""

    log_depth: np.ndarray
    pose: np.ndarray
    flow: np.ndarray

    def __post_init__(self):
        self.log_depth = np.maximum(np.asarray(self.log_depth, dtype=np.float64), MIN_LOG_DEPTH)
        self.pose = np.asarray(self.pose, dtype=np.float64)
        self.flow = np.asarray(self.flow, dtype=np.float64)
        LossVariables(self.log_depth, self.pose, self.flow)  # shape checks
        if not self.is_finite():
            raise FieldError("variables must be finite")

    @classmethod
    def from_depth(cls, depth: np.ndarray, pose: np.ndarray, flow: np.ndarray) -> "VariableSet":
        depth = np.asarray(depth, dtype=np.float64)
        if np.any(depth < FieldDefaults.MIN_DEPTH.value):
            raise FieldError(f"depth below min_depth={FieldDefaults.MIN_DEPTH.value}")
        return cls(np.log(depth), pose, flow)

    @property
    def depth(self) -> np.ndarray:
        return np.exp(self.log_depth)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.log_depth.shape[1:]

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.log_depth))
            and np.all(np.isfinite(self.pose))
            and np.all(np.isfinite(self.flow))
        )

    def copy(self) -> "VariableSet":
        return VariableSet(self.log_depth.copy(), self.pose.copy(), self.flow.copy())

    def to_loss_variables(self) -> LossVariables:
        return LossVariables(self.depth, self.pose, self.flow)


@dataclass
class LossTrace:
    """Per-iteration loss terms, recorded before each update."""

    rows: List[Dict[str, Union[int, float, str]]] = field(default_factory=list)

    @property
    def columns(self) -> List[str]:
        return ["iteration", "stage"] + list(TERM_NAMES) + ["total"]

    def append(self, iteration: int, stage: str, report: LossReport) -> None:
        row: Dict[str, Union[int, float, str]] = {"iteration": iteration, "stage": stage}
        row.update(report.terms)
        row["total"] = report.total
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows], dtype=np.float64)

    @property
    def totals(self) -> np.ndarray:
        return self.column("total")

    def stage_segments(self) -> List[Tuple[str, np.ndarray]]:
        segments: List[Tuple[str, List[float]]] = []
        for row in self.rows:
            if not segments or segments[-1][0] != row["stage"]:
                segments.append((row["stage"], []))
            segments[-1][1].append(row["total"])
        return [(name, np.array(values)) for name, values in segments]

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=self.columns)
            writer.writeheader()
            for row in self.rows:
                writer.writerow(
                    {k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()}
                )

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "LossTrace":
        rows = []
        with open(path, newline="") as handle:
            for raw in csv.DictReader(handle):
                row: Dict[str, Union[int, float, str]] = {
                    "iteration": int(raw["iteration"]),
                    "stage": raw["stage"],
                }
                row.update({name: float(raw[name]) for name in list(TERM_NAMES) + ["total"]})
                rows.append(row)
        return cls(rows)


def windowed_nonincreasing(
    values: Sequence[float],
    window: int = OptimizerDefaults.MONOTONE_WINDOW.value,
    rtol: float = 0.0,
) -> bool:
    """True if every value is ≤ the value ``window − 1`` steps earlier (within ``rtol``)."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) < window:
        return bool(values[-1] <= values[0] * (1.0 + rtol)) if len(values) else True
    start, end = values[: len(values) - window + 1], values[window - 1 :]
    return bool(np.all(end <= start + rtol * np.abs(start)))


def trace_is_windowed_nonincreasing(
    trace: LossTrace, window: int = OptimizerDefaults.MONOTONE_WINDOW.value, rtol: float = 0.0
) -> bool:
    """Soft monotonicity per stage; the total jumps when the λ vector changes."""
    return all(windowed_nonincreasing(values, window, rtol) for _, values in trace.stage_segments())