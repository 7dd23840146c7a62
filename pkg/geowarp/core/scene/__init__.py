"""
Analytic oracle world: textured planes and a moving quad with exact ground truth.
"""

from .io import load_scene, save_scene
from .models import (
    CameraSpec,
    NoiseSpec,
    PlaneSpec,
    QuadSpec,
    SceneFrame,
    SceneSpec,
    TextureSpec,
)
from .perturb import VariableArrays, ground_truth_arrays, ground_truth_masks, perturb
from .presets import (
    PRESETS,
    corner_scene,
    gradcheck_scene,
    standard_oracle_scene,
    symmetric_lateral_scene,
    two_plane_scene,
)
from .render import ProceduralTexture, SceneModel, render, supersampled_occlusion

__all__ = [
    "TextureSpec",
    "PlaneSpec",
    "QuadSpec",
    "CameraSpec",
    "SceneSpec",
    "SceneFrame",
    "NoiseSpec",
    "ProceduralTexture",
    "SceneModel",
    "render",
    "supersampled_occlusion",
    "VariableArrays",
    "ground_truth_arrays",
    "ground_truth_masks",
    "perturb",
    "PRESETS",
    "standard_oracle_scene",
    "two_plane_scene",
    "symmetric_lateral_scene",
    "corner_scene",
    "gradcheck_scene",
    "save_scene",
    "load_scene",
]
