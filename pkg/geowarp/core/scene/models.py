from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from geowarp.config.constants import SceneDefaults
from geowarp.core.fields.models import ImageBuffer, MaskField, ScalarField, VectorField
from geowarp.core.geometry import Intrinsics, PoseSE3

Vector3 = Tuple[float, float, float]


class TextureSpec(BaseModel):
    """Band-limited procedural texture: a sum of random-phase sinusoids."""

    model_config = {"frozen": True, "allow_inf_nan": False}

    seed: int = Field(default=0, ge=0)
    num_waves: int = Field(
        default=SceneDefaults.NUM_WAVES.value, ge=1, le=SceneDefaults.MAX_WAVES.value
    )
    min_wavelength: float = Field(default=SceneDefaults.MIN_WAVELENGTH.value, gt=0.0)


class PlaneSpec(BaseModel):
    """World plane n·X = offset, optionally bounded in its own 2-D coordinates."""

    model_config = {"frozen": True, "allow_inf_nan": False}

    normal: Vector3
    offset: float
    texture: TextureSpec = Field(default_factory=TextureSpec)
    bounds: Optional[Tuple[float, float, float, float]] = None

    @field_validator("normal")
    @classmethod
    def _unit_normal(cls, value: Vector3) -> Vector3:
        norm = float(np.linalg.norm(value))
        if norm == 0.0:
            raise ValueError("plane normal must be non-zero")
        return tuple(float(v) / norm for v in value)

    @field_validator("bounds")
    @classmethod
    def _ordered_bounds(cls, value):
        if value is not None and (value[0] >= value[1] or value[2] >= value[3]):
            raise ValueError("bounds must be (s_min, s_max, t_min, t_max) with min < max")
        return value


class QuadSpec(BaseModel):
    """Textured rectangle translating by ``motion`` per frame."""

    model_config = {"frozen": True, "allow_inf_nan": False}

    center: Vector3
    half_u: Vector3
    half_v: Vector3
    motion: Vector3 = (0.0, 0.0, 0.0)
    texture: TextureSpec = Field(default_factory=lambda: TextureSpec(seed=7))

    @model_validator(mode="after")
    def _perpendicular_axes(self):
        u, v = np.asarray(self.half_u), np.asarray(self.half_v)
        if np.linalg.norm(u) == 0 or np.linalg.norm(v) == 0:
            raise ValueError("quad half-axes must be non-zero")
        if abs(float(u @ v)) > 1e-9 * np.linalg.norm(u) * np.linalg.norm(v):
            raise ValueError("quad half-axes must be perpendicular")
        return self


class CameraSpec(BaseModel):
    """Camera-to-world pose as (axis-angle, position)."""

    model_config = {"frozen": True, "allow_inf_nan": False}

    rotation: Vector3 = (0.0, 0.0, 0.0)
    position: Vector3 = (0.0, 0.0, 0.0)

    def pose(self) -> PoseSE3:
        return PoseSE3.from_params(list(self.rotation) + list(self.position))


class SceneSpec(BaseModel):
    """Analytic world rendered into the frames t−1, t, t+1."""

    model_config = {"frozen": True, "allow_inf_nan": False}

    height: int = Field(default=SceneDefaults.HEIGHT.value, ge=4)
    width: int = Field(default=SceneDefaults.WIDTH.value, ge=4)
    fx: float = Field(default=SceneDefaults.FOCAL.value, gt=0.0)
    fy: float = Field(default=SceneDefaults.FOCAL.value, gt=0.0)
    cx: Optional[float] = None
    cy: Optional[float] = None
    channels: int = 1
    planes: List[PlaneSpec]
    quad: Optional[QuadSpec] = None
    cameras: List[CameraSpec]

    @field_validator("channels")
    @classmethod
    def _channels(cls, value: int) -> int:
        if value not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        return value

    @field_validator("cameras")
    @classmethod
    def _three_cameras(cls, value: List[CameraSpec]) -> List[CameraSpec]:
        if len(value) != 3:
            raise ValueError("exactly three cameras (t−1, t, t+1) are required")
        return value

    @field_validator("planes")
    @classmethod
    def _some_plane(cls, value: List[PlaneSpec]) -> List[PlaneSpec]:
        if not value:
            raise ValueError("at least one plane is required")
        return value

    @property
    def intrinsics(self) -> Intrinsics:
        cx = (self.width - 1) / 2.0 if self.cx is None else self.cx
        cy = (self.height - 1) / 2.0 if self.cy is None else self.cy
        return Intrinsics(self.fx, self.fy, cx, cy)

    def camera_poses(self) -> List[PoseSE3]:
        return [camera.pose() for camera in self.cameras]

    def relative_pose(self, source: int, target: int) -> PoseSE3:
        """Camera-``source`` coordinates to camera-``target`` coordinates."""
        poses = self.camera_poses()
        return poses[target].inverse().compose(poses[source])

    def reseeded(self, offset: int) -> "SceneSpec":
        """Same geometry with every texture seed shifted by ``offset``."""
        if offset == 0:
            return self

        def shifted(texture: TextureSpec) -> TextureSpec:
            return texture.model_copy(update={"seed": texture.seed + offset})

        planes = [p.model_copy(update={"texture": shifted(p.texture)}) for p in self.planes]
        quad = None
        if self.quad is not None:
            quad = self.quad.model_copy(update={"texture": shifted(self.quad.texture)})
        return self.model_copy(update={"planes": planes, "quad": quad})


@dataclass(frozen=True)
class SceneFrame:
    """One rendered frame with exact ground truth.

    Forward quantities point to the next frame, backward to the previous one;
    they are None where that frame does not exist. Occlusion masks are 1 where
    the surface point stays visible.
    """

    index: int
    image: ImageBuffer
    depth: ScalarField
    dynamic: MaskField
    flow_forward: Optional[VectorField] = None
    flow_backward: Optional[VectorField] = None
    occlusion_forward: Optional[MaskField] = None
    occlusion_backward: Optional[MaskField] = None
    valid_forward: Optional[MaskField] = None
    valid_backward: Optional[MaskField] = None
    pose_forward: Optional[PoseSE3] = None
    pose_backward: Optional[PoseSE3] = None


class NoiseSpec(BaseModel):
    """Perturbation magnitudes for optimizer initialization."""

    model_config = {"frozen": True, "allow_inf_nan": False}

    depth: float = Field(default=0.0, ge=0.0)
    rotation: float = Field(default=0.0, ge=0.0)
    translation: float = Field(default=0.0, ge=0.0)
    flow: float = Field(default=0.0, ge=0.0)
