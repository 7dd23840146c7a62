"""
Staged Adam optimization of log-depth, pose and flow against the total loss.
"""

from .models import (
    LossTrace,
    OptimizerConfig,
    StageSchedule,
    StageSpec,
    VariableSet,
    trace_is_windowed_nonincreasing,
    windowed_nonincreasing,
)
from .optimizer import (
    Adam,
    OptimizationResult,
    apply_variant,
    optimize,
    refresh_fundamentals,
    refresh_masks,
    select_stages,
    stage_schedule_default,
)

__all__ = [
    "VariableSet",
    "StageSpec",
    "StageSchedule",
    "OptimizerConfig",
    "LossTrace",
    "windowed_nonincreasing",
    "trace_is_windowed_nonincreasing",
    "Adam",
    "OptimizationResult",
    "optimize",
    "refresh_masks",
    "refresh_fundamentals",
    "stage_schedule_default",
    "select_stages",
    "apply_variant",
]
