import logging
from typing import NamedTuple, Sequence

import numpy as np

from geowarp.core.exceptions import SceneSpecError
from geowarp.core.geometry import PoseSE3
from geowarp.core.masks.models import DirectionMasks, MaskSet

from .models import NoiseSpec, SceneFrame

logger = logging.getLogger(__name__)

MIN_DEPTH_FACTOR = 0.1


class VariableArrays(NamedTuple):
    """Depth (3, H, W) for (t−1, t, t+1), pose (2, 6) and flow (2, H, W, 2), forward first."""

    depth: np.ndarray
    pose: np.ndarray
    flow: np.ndarray


def ground_truth_arrays(frames: Sequence[SceneFrame]) -> VariableArrays:
    if len(frames) != 3:
        raise SceneSpecError(f"expected three frames, got {len(frames)}")
    centre = frames[1]
    depth = np.stack([np.array(frame.depth.data) for frame in frames])
    pose = np.stack([centre.pose_forward.to_params(), centre.pose_backward.to_params()])
    flow = np.stack([np.array(centre.flow_forward.data), np.array(centre.flow_backward.data)])
    return VariableArrays(depth, pose, flow)


def _unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def perturb(frames: Sequence[SceneFrame], noise: NoiseSpec, seed: int = 0) -> VariableArrays:
    """Ground truth plus seeded noise.

    Depth is scaled by (1 + σ_d·N) (clipped at 0.1), each pose is rotated by
    exactly ``noise.rotation`` radians about a random axis and its translation
    moved by ``noise.translation``·‖t‖ in a random direction, and the flow
    receives additive N(0, σ_f²) noise. All draws happen regardless of the
    magnitudes so that the stream stays aligned across noise settings.
    """
    truth = ground_truth_arrays(frames)
    rng = np.random.default_rng(seed)

    factor = 1.0 + noise.depth * rng.standard_normal(truth.depth.shape)
    depth = truth.depth * np.maximum(factor, MIN_DEPTH_FACTOR)

    pose = truth.pose.copy()
    for i in range(2):
        axis = _unit_vector(rng)
        direction = _unit_vector(rng)
        if noise.rotation > 0.0:
            base = PoseSE3.from_params(pose[i])
            rotated = PoseSE3.from_params(np.concatenate([axis * noise.rotation, np.zeros(3)]))
            pose[i, :3] = rotated.compose(base).to_params()[:3]
        if noise.translation > 0.0:
            pose[i, 3:] += noise.translation * np.linalg.norm(truth.pose[i, 3:]) * direction

    flow = truth.flow + noise.flow * rng.standard_normal(truth.flow.shape)
    logger.debug(
        f"perturbed ground truth (seed={seed}, depth={noise.depth}, rotation={noise.rotation}, "
        f"translation={noise.translation}, flow={noise.flow})"
    )
    return VariableArrays(depth, pose, flow)


def ground_truth_masks(frames: Sequence[SceneFrame]) -> MaskSet:
    """Exact in-view, visibility and static masks of the centre frame."""
    if len(frames) != 3:
        raise SceneSpecError(f"expected three frames, got {len(frames)}")
    centre = frames[1]
    return MaskSet(
        DirectionMasks(
            centre.valid_forward,
            centre.occlusion_forward,
            centre.dynamic,
            centre.valid_forward,
        ),
        DirectionMasks(
            centre.valid_backward,
            centre.occlusion_backward,
            centre.dynamic,
            centre.valid_backward,
        ),
    )
