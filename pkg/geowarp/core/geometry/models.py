from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from geowarp.core.exceptions import GeometryError

ORTHONORMAL_TOLERANCE = 1e-9


def orthonormality_error(rotation: np.ndarray) -> float:
    """max(|RᵀR − I|, |det R − 1|)."""
    gram = rotation.T @ rotation - np.eye(3)
    return float(max(np.abs(gram).max(), abs(np.linalg.det(rotation) - 1.0)))


def nearest_rotation(matrix: np.ndarray) -> np.ndarray:
    """Project a 3x3 matrix onto SO(3) via SVD."""
    u, _, vt = np.linalg.svd(matrix)
    rotation = u @ vt
    if np.linalg.det(rotation) < 0:
        u[:, -1] *= -1
        rotation = u @ vt
    return rotation


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixels; pixel centres sit at integer coordinates."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        values = (self.fx, self.fy, self.cx, self.cy)
        if not all(np.isfinite(v) for v in values):
            raise GeometryError(f"Intrinsics must be finite, got {values}")
        if self.fx <= 0 or self.fy <= 0:
            raise GeometryError(f"focal lengths must be positive, got {self.fx}, {self.fy}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    @property
    def inverse(self) -> np.ndarray:
        return np.array(
            [
                [1.0 / self.fx, 0.0, -self.cx / self.fx],
                [0.0, 1.0 / self.fy, -self.cy / self.fy],
                [0.0, 0.0, 1.0],
            ]
        )

    def scaled(self, level: int) -> "Intrinsics":
        """Intrinsics of pyramid ``level`` (each level halves resolution)."""
        fx, fy, cx, cy = self.fx, self.fy, self.cx, self.cy
        for _ in range(level):
            fx, fy = fx / 2.0, fy / 2.0
            cx, cy = (cx - 0.5) / 2.0, (cy - 0.5) / 2.0
        return Intrinsics(fx, fy, cx, cy)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "Intrinsics":
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls(matrix[0, 0], matrix[1, 1], matrix[0, 2], matrix[1, 2])

    def to_dict(self) -> Dict[str, float]:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}


@dataclass(frozen=True)
class PoseSE3:
    """Rigid motion X' = R X + t."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=np.float64)
        translation = np.array(self.translation, dtype=np.float64).reshape(-1)
        if rotation.shape != (3, 3) or translation.shape != (3,):
            raise GeometryError(
                f"PoseSE3 expects (3, 3) rotation and 3-vector translation, "
                f"got {rotation.shape} and {translation.shape}"
            )
        if not (np.all(np.isfinite(rotation)) and np.all(np.isfinite(translation))):
            raise GeometryError("PoseSE3 contains non-finite values")
        error = orthonormality_error(rotation)
        if error > ORTHONORMAL_TOLERANCE:
            raise GeometryError(f"rotation is not orthonormal (error {error:.3g})")
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "PoseSE3":
        return cls()

    @classmethod
    def from_params(cls, params: Sequence[float]) -> "PoseSE3":
        """From a 6-vector (axis-angle ω, translation t)."""
        params = np.asarray(params, dtype=np.float64).reshape(-1)
        if params.shape != (6,):
            raise GeometryError(f"pose parameters must be a 6-vector, got {params.shape}")
        rotation = Rotation.from_rotvec(params[:3]).as_matrix()
        return cls(rotation, params[3:])

    def to_params(self) -> np.ndarray:
        omega = Rotation.from_matrix(self.rotation).as_rotvec()
        return np.concatenate([omega, self.translation])

    @classmethod
    def from_matrix34(cls, matrix: np.ndarray, reorthogonalize: bool = False) -> "PoseSE3":
        matrix = np.asarray(matrix, dtype=np.float64).reshape(3, 4)
        rotation = matrix[:, :3]
        if reorthogonalize:
            rotation = nearest_rotation(rotation)
        return cls(rotation, matrix[:, 3])

    def as_matrix34(self) -> np.ndarray:
        return np.hstack([self.rotation, self.translation[:, None]])

    def as_matrix4(self) -> np.ndarray:
        return np.vstack([self.as_matrix34(), [0.0, 0.0, 0.0, 1.0]])

    def compose(self, other: "PoseSE3") -> "PoseSE3":
        """``self ∘ other``: apply ``other`` first."""
        return PoseSE3(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def __matmul__(self, other: "PoseSE3") -> "PoseSE3":
        return self.compose(other)

    def inverse(self) -> "PoseSE3":
        rt = self.rotation.T
        return PoseSE3(rt, -rt @ self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform (..., 3) points."""
        return points @ self.rotation.T + self.translation

    @property
    def rotation_angle(self) -> float:
        """Rotation magnitude in radians."""
        cos = np.clip((np.trace(self.rotation) - 1.0) / 2.0, -1.0, 1.0)
        return float(np.arccos(cos))

    def to_dict(self) -> Dict[str, list]:
        return {
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
        }
