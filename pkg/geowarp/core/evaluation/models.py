from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from geowarp.core.exceptions import FieldError, ParseError
from geowarp.core.fields.models import MaskField, VectorField, require_same_shape
from geowarp.core.geometry import Intrinsics, PoseSE3

CALIB_VALUES = 12
POSE_VALUES = 12

FLOW_REGIONS = ("noc", "occ", "all", "bg", "fg")
DEPTH_COLUMNS = ("abs_rel", "sq_rel", "rmse", "rmse_log", "a1", "a2", "a3")


@dataclass(frozen=True)
class CalibRecord:
    """``key: 12 floats`` entries of a KITTI calibration file, each a row-major 3x4 matrix."""

    entries: Dict[str, np.ndarray]

    def __post_init__(self):
        entries = {}
        for key, values in self.entries.items():
            matrix = np.array(values, dtype=np.float64).reshape(3, 4)
            matrix.setflags(write=False)
            entries[key] = matrix
        if not entries:
            raise ParseError("calibration has no entries")
        for key, matrix in entries.items():
            if key.startswith("P") and (matrix[0, 0] <= 0 or matrix[1, 1] <= 0):
                raise ParseError(f"{key}: focal lengths must be positive")
        object.__setattr__(self, "entries", entries)

    @property
    def keys(self) -> List[str]:
        return list(self.entries)

    def projection(self, camera: str = "P2") -> np.ndarray:
        if camera not in self.entries:
            raise KeyError(f"no calibration entry {camera!r}; have {self.keys}")
        return self.entries[camera]

    def intrinsics(self, camera: str = "P2") -> Intrinsics:
        return Intrinsics.from_matrix(self.projection(camera)[:, :3])


@dataclass(frozen=True)
class TrajectoryFile:
    """Camera-to-world poses, one per frame.

    ``reorthogonalized[i]`` marks rows whose rotation was projected onto SO(3)
    while parsing.
    """

    poses: List[PoseSE3]
    reorthogonalized: List[bool] = field(default_factory=list)

    def __post_init__(self):
        flags = list(self.reorthogonalized) or [False] * len(self.poses)
        if len(flags) != len(self.poses):
            raise ValueError("one reorthogonalization flag per pose")
        object.__setattr__(self, "poses", list(self.poses))
        object.__setattr__(self, "reorthogonalized", flags)

    def __len__(self) -> int:
        return len(self.poses)

    @property
    def positions(self) -> np.ndarray:
        return np.array([pose.translation for pose in self.poses]).reshape(-1, 3)

    def window(self, start: int, length: int) -> "TrajectoryFile":
        return TrajectoryFile(
            self.poses[start : start + length], self.reorthogonalized[start : start + length]
        )

    def relative_to_first(self) -> "TrajectoryFile":
        """Express every pose in the camera frame of the first one."""
        if not self.poses:
            return self
        anchor = self.poses[0].inverse()
        return TrajectoryFile([anchor.compose(pose) for pose in self.poses], self.reorthogonalized)


@dataclass(frozen=True)
class FlowGroundTruth:
    """Sparse ground-truth flow.

    ``noc`` marks valid pixels that stay visible in the second frame; ``foreground``
    marks moving-object pixels. Both are optional.
    """

    flow: VectorField
    valid: MaskField
    noc: Optional[MaskField] = None
    foreground: Optional[MaskField] = None

    def __post_init__(self):
        shapes = [self.flow.shape, self.valid.shape]
        shapes += [m.shape for m in (self.noc, self.foreground) if m is not None]
        require_same_shape(*shapes)

    @property
    def shape(self):
        return self.flow.shape

    def regions(self) -> Dict[str, np.ndarray]:
        """Boolean selections of every region this ground truth can define."""
        valid = self.valid.as_bool()
        regions = {"all": valid}
        if self.noc is not None:
            noc = valid & self.noc.as_bool()
            regions["noc"] = noc
            regions["occ"] = valid & ~noc
        if self.foreground is not None:
            fg = valid & self.foreground.as_bool()
            regions["fg"] = fg
            regions["bg"] = valid & ~fg
        return {name: regions[name] for name in FLOW_REGIONS if name in regions}

    @classmethod
    def from_noc_occ(
        cls, occ: "FlowGroundTruth", noc: "FlowGroundTruth", foreground: Optional[MaskField] = None
    ) -> "FlowGroundTruth":
        """Merge the devkit's ``flow_occ`` and ``flow_noc`` files for one frame."""
        require_same_shape(occ.shape, noc.shape)
        return cls(occ.flow, occ.valid, noc=noc.valid, foreground=foreground)


@dataclass(frozen=True)
class FlowMetrics:
    """End-point error and outlier percentage per region; None where a region is empty."""

    epe: Dict[str, Optional[float]]
    outliers: Dict[str, Optional[float]]
    counts: Dict[str, int]

    def columns(self) -> List[str]:
        regions = [r for r in FLOW_REGIONS if r in self.epe]
        return [f"epe_{r}" for r in regions] + [f"fl_{r}" for r in regions]

    def to_dict(self) -> Dict[str, Optional[float]]:
        row = {f"epe_{r}": v for r, v in self.epe.items()}
        row.update({f"fl_{r}": v for r, v in self.outliers.items()})
        return {name: row[name] for name in self.columns()}


@dataclass(frozen=True)
class DepthMetrics:
    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    a1: float
    a2: float
    a3: float
    scale: float = 1.0
    count: int = 0

    def as_tuple(self):
        return tuple(getattr(self, name) for name in DEPTH_COLUMNS)

    def to_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in DEPTH_COLUMNS}


@dataclass(frozen=True)
class AteResult:
    """Mean and population std of per-snippet ATE."""

    mean: float
    std: float
    errors: np.ndarray
    snippet_len: int
    alignment: str

    def to_dict(self) -> Dict[str, object]:
        return {
            "ate_mean": self.mean,
            "ate_std": self.std,
            "snippets": int(len(self.errors)),
            "snippet_len": self.snippet_len,
            "alignment": self.alignment,
        }


def require_flow_shape(pred: VectorField, gt: FlowGroundTruth) -> None:
    if pred.shape != gt.shape:
        raise FieldError(f"prediction shape {pred.shape} does not match ground truth {gt.shape}")
