import json
import logging
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator

from geowarp.config.constants import (
    AblationVariants,
    GradientCheckDefaults,
    MetricDefaults,
    OptimizerDefaults,
    RunDefaults,
)
from geowarp.config.env_loader import get_stage_iterations
from geowarp.core.losses.models import PhotometricConfig
from geowarp.core.masks.config import MaskConfig
from geowarp.core.scene.models import NoiseSpec

logger = logging.getLogger(__name__)

COMMANDS = ("synth", "optimize", "gradcheck", "eval-flow", "eval-depth", "eval-odom")


class SynthOptions(BaseModel):
    """``scene`` is a preset name or the path of a scene spec JSON."""

    model_config = {"frozen": True, "extra": "forbid"}

    scene: str = RunDefaults.SCENE.value


class OptimizeOptions(BaseModel):
    model_config = {"frozen": True, "extra": "forbid", "allow_inf_nan": False}

    scene_dir: Optional[str] = None
    stages: str = RunDefaults.STAGES.value
    scales: int = Field(default=OptimizerDefaults.NUM_SCALES.value, ge=1)
    iterations: int = Field(default_factory=get_stage_iterations, gt=0)
    step_size: float = Field(default=OptimizerDefaults.STEP_SIZE.value, gt=0.0)
    final_step_size: Optional[float] = Field(
        default=OptimizerDefaults.FINAL_STEP_SIZE.value, gt=0.0
    )
    variant: str = AblationVariants.DEFAULT
    trainable: Tuple[str, ...] = ("depth", "pose", "flow")
    noise: NoiseSpec = Field(
        default_factory=lambda: NoiseSpec(
            rotation=RunDefaults.INIT_ROTATION_NOISE.value,
            translation=RunDefaults.INIT_TRANSLATION_NOISE.value,
        )
    )
    masks: MaskConfig = Field(default_factory=MaskConfig)
    photometric: PhotometricConfig = Field(default_factory=PhotometricConfig)

    @field_validator("variant")
    @classmethod
    def _known_variant(cls, value: str) -> str:
        if value not in AblationVariants.ATTENTION:
            raise ValueError(f"variant must be one of {AblationVariants.names()}, got {value!r}")
        return value


class GradcheckOptions(BaseModel):
    model_config = {"frozen": True, "extra": "forbid", "allow_inf_nan": False}

    step: float = Field(default=GradientCheckDefaults.STEP.value, gt=0.0)
    tolerance: float = Field(default=GradientCheckDefaults.TOLERANCE.value, gt=0.0)
    pixels_per_field: int = Field(default=GradientCheckDefaults.PIXELS_PER_FIELD.value, ge=1)
    scales: int = Field(default=GradientCheckDefaults.NUM_SCALES.value, ge=1)


class EvalOptions(BaseModel):
    """Inputs of the three metric suites.

    Flow and depth read matching file names from ``pred`` and ``gt`` directories;
    odometry reads two pose files.
    """

    model_config = {"frozen": True, "extra": "forbid", "allow_inf_nan": False}

    pred: Optional[str] = None
    gt: Optional[str] = None
    noc: Optional[str] = None
    foreground: Optional[str] = None
    file_list: Optional[str] = None
    cap: float = Field(default=MetricDefaults.DEPTH_CAP.value, gt=0.0)
    median_scaling: bool = MetricDefaults.MEDIAN_SCALING.value
    snippet_len: int = Field(default=MetricDefaults.SNIPPET_LENGTH.value, ge=2)
    alignment: Literal["scale", "umeyama"] = "scale"


class RunConfig(BaseModel):
    """Fully resolved settings of one CLI run; written as config.json next to its outputs."""

    model_config = {"frozen": True, "extra": "forbid"}

    command: Literal["synth", "optimize", "gradcheck", "eval-flow", "eval-depth", "eval-odom"]
    seed: int = Field(default=0, ge=0)
    out: str = RunDefaults.OUT_DIR.value
    synth: SynthOptions = Field(default_factory=SynthOptions)
    optimize: OptimizeOptions = Field(default_factory=OptimizeOptions)
    gradcheck: GradcheckOptions = Field(default_factory=GradcheckOptions)
    evaluation: EvalOptions = Field(default_factory=EvalOptions)

    def required_paths(self) -> Dict[str, Optional[str]]:
        """Input paths the command reads, by option name."""
        if self.command == "optimize":
            return {"optimize.scene_dir": self.optimize.scene_dir}
        if self.command.startswith("eval-"):
            paths = {"evaluation.pred": self.evaluation.pred, "evaluation.gt": self.evaluation.gt}
            for name in ("noc", "foreground", "file_list"):
                value = getattr(self.evaluation, name)
                if value is not None:
                    paths[f"evaluation.{name}"] = value
            return paths
        return {}

    def validate_paths(self) -> None:
        """Fail before any work when an input is missing."""
        for name, value in self.required_paths().items():
            if value is None:
                raise ValueError(f"{self.command} requires {name}")
            if not Path(value).exists():
                raise FileNotFoundError(f"{name} does not exist: {value}")


def _deep_merge(base: Dict[str, Any], updates: Mapping[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in updates.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _nest(flat: Mapping[str, Any]) -> Dict[str, Any]:
    """``{"optimize.stages": "1"}`` -> ``{"optimize": {"stages": "1"}}``; None values dropped."""
    nested: Dict[str, Any] = {}
    for dotted, value in flat.items():
        if value is None:
            continue
        node = nested
        *parents, leaf = dotted.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    return nested


class Config:
    """Run configuration resolution: flags > ``--config`` file > defaults."""

    @staticmethod
    def get_default_config(command: str) -> Dict[str, Any]:
        return RunConfig(command=command).model_dump(mode="json")

    @staticmethod
    def load_file(path: Union[str, Path]) -> Dict[str, Any]:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file does not exist: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ValueError(f"config file {path} is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
        return data

    @classmethod
    def resolve(
        cls,
        command: str,
        config_file: Optional[Union[str, Path]] = None,
        overrides: Optional[Mapping[str, Any]] = None,
    ) -> RunConfig:
        """Merge defaults, the file and dotted-key flag overrides, then validate."""
        merged = cls.get_default_config(command)
        if config_file is not None:
            file_data = cls.load_file(config_file)
            file_data.pop("command", None)
            merged = _deep_merge(merged, file_data)
            logger.debug(f"merged config file {config_file}")
        merged = _deep_merge(merged, _nest(overrides or {}))
        merged["command"] = command
        return RunConfig.model_validate(merged)

    @staticmethod
    def export_config(run_config: RunConfig, outdir: Union[str, Path]) -> Path:
        """Write the resolved config (seed included) into ``outdir``."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / RunDefaults.CONFIG_FILE.value
        path.write_text(json.dumps(run_config.model_dump(mode="json"), indent=2, sort_keys=True))
        return path
