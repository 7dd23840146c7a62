from pydantic import BaseModel, Field

from geowarp.config.constants import MaskDefaults


class MaskConfig(BaseModel):
    """Thresholds for the occlusion and dynamic-object masks."""

    model_config = {"frozen": True, "allow_inf_nan": False}

    delta: float = Field(default=MaskDefaults.DELTA.value, gt=0.0, lt=1.0)
    alpha1: float = Field(default=MaskDefaults.ALPHA1.value, ge=0.0)
    alpha2: float = Field(default=MaskDefaults.ALPHA2.value, ge=0.0)
