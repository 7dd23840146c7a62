from enum import Enum
from typing import Dict, List


class FieldDefaults(Enum):
    """Default values for dense field operations."""

    MIN_DEPTH = 1e-3
    SSIM_C1 = 0.01**2
    SSIM_C2 = 0.03**2
    SSIM_WINDOW = 3
    MIN_PYRAMID_SIDE = 4
    GWF_MAGIC = b"GWF1"


class MaskDefaults(Enum):
    """Occlusion / dynamic-object mask thresholds."""

    DELTA = 0.48
    ALPHA1 = 0.01
    ALPHA2 = 0.5


class PhotometricDefaults(Enum):
    """Photometric and smoothness loss parameters."""

    BETA1 = 0.15
    BETA2 = 0.85
    ALPHA_S = 10.0
    FLOW_EPSILON = 1e-3
    DEPTH_EDGE_RATIO = 1.5


class RansacDefaults(Enum):
    """RANSAC parameters for fundamental-matrix estimation."""

    MAX_ITERATIONS = 1000
    SAMPSON_THRESHOLD = 1e-3
    MIN_INLIER_FRACTION = 0.5
    CONFIDENCE = 0.999
    SEED = 0
    SAMPLE_COUNT = 200
    MIN_TRANSLATION = 1e-6


class OptimizerDefaults(Enum):
    """Direct optimizer parameters."""

    BETA1 = 0.9
    BETA2 = 0.999
    EPSILON = 1e-8
    MASK_REFRESH = 10
    NUM_SCALES = 4
    STEP_SIZE = 1e-4
    FINAL_STEP_SIZE = 1e-5
    STAGE_ITERATIONS = 200
    LOG_DEPTH_STEP_SCALE = 10.0
    POSE_STEP_SCALE = 1.0
    FLOW_STEP_SCALE = 500.0
    ATTENTION_STEP_SCALE = 1.0
    MONOTONE_WINDOW = 50


class GradientCheckDefaults(Enum):
    """Finite-difference gradient check parameters."""

    STEP = 1e-4
    TOLERANCE = 1e-4
    HEIGHT = 16
    WIDTH = 24
    PIXELS_PER_FIELD = 12
    NUM_SCALES = 3


class MetricDefaults(Enum):
    """KITTI benchmark metric conventions."""

    DEPTH_CAP = 80.0
    DEPTH_MIN = 1e-3
    MEDIAN_SCALING = True
    SNIPPET_LENGTH = 5
    OUTLIER_PIXELS = 3.0
    OUTLIER_RATIO = 0.05
    FLOW_SCALE = 64.0
    FLOW_OFFSET = 2**15
    DEPTH_PNG_SCALE = 256.0


class SceneDefaults(Enum):
    """Synthetic oracle scene parameters."""

    HEIGHT = 64
    WIDTH = 96
    FOCAL = 80.0
    MAX_WAVES = 32
    NUM_WAVES = 12
    MIN_WAVELENGTH = 1.0
    INTENSITY_LOW = 0.05
    INTENSITY_HIGH = 0.95


class RunDefaults(Enum):
    """Command-line run defaults."""

    OUT_DIR = "geowarp_out"
    SCENE = "standard"
    STAGES = "1,2,3"
    INIT_ROTATION_NOISE = 0.03490658503988659  # 2 degrees
    INIT_TRANSLATION_NOISE = 0.05
    CONFIG_FILE = "config.json"
    SUMMARY_FILE = "summary.json"


class LossConstants:
    """Loss term names and the published three-stage weight vectors."""

    TERM_NAMES: List[str] = [
        "ph_d",
        "ph_f",
        "c_d",
        "c_f",
        "c_df",
        "s_d",
        "s_f",
        "g",
    ]

    STAGE_WEIGHTS: Dict[str, List[float]] = {
        "stage1": [1.0, 1.0, 0.1, 0.01, 0.0, 10.0, 0.5, 0.0],
        "stage2": [1.0, 1.0, 0.1, 0.01, 1.0, 10.0, 0.5, 0.0],
        "stage3": [1.0, 1.0, 0.1, 0.01, 1.0, 10.0, 0.5, 0.1],
    }

    @classmethod
    def validate_weights(cls, weights: List[float]) -> bool:
        """Validate a λ vector: eight finite, nonnegative entries."""
        if len(weights) != len(cls.TERM_NAMES):
            return False
        return all(w >= 0.0 and w == w and w != float("inf") for w in weights)


class AblationVariants:
    """Optimizer variants: whether the pose passes through the attention block,
    and which loss terms stay off in every stage.

    ``atten-joint`` is the pose-table name of the full method and equals
    ``atten-dfc-g``. ``joint`` runs every term without attention.
    """

    DEFAULT = "joint"

    ATTENTION: Dict[str, bool] = {
        "base": False,
        "atten": True,
        "atten-dfc": True,
        "atten-dfc-g": True,
        "atten-joint": True,
        "joint": False,
    }

    DISABLED_TERMS: Dict[str, List[str]] = {
        "base": ["c_df", "g"],
        "atten": ["c_df", "g"],
        "atten-dfc": ["g"],
        "atten-dfc-g": [],
        "atten-joint": [],
        "joint": [],
    }

    @classmethod
    def names(cls) -> List[str]:
        return list(cls.ATTENTION)
