"""Total loss over the image pyramid with analytic gradients.

Directional terms average the forward (t→t+1) and backward (t→t−1) versions.
Masks are constants; each term additionally requires the current
correspondence to be valid. The depth terms also skip pixels that straddle a
depth discontinuity (a coarse block or a sampled bilinear cell), and the
photometric terms keep only pixels whose SSIM window is fully kept.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from geowarp.config.constants import OptimizerDefaults
from geowarp.config.env_loader import get_max_workers
from geowarp.core.epipolar.loss import epipolar_structure, epipolar_value_and_grad
from geowarp.core.exceptions import FieldError, NumericalError
from geowarp.core.fields.models import ImageBuffer, pixel_grid
from geowarp.core.fields.operators import (
    block_ratio,
    downsample,
    downsample_adjoint,
    downsample_mask,
    pyramid_levels,
    second_difference_array,
    ssim_support,
)
from geowarp.core.fields.sampling import cell_ratio, sample_array, sample_array_adjoint
from geowarp.core.geometry import Intrinsics, PoseSE3, reproject_field
from geowarp.core.masks.models import MaskSet

from .models import TERM_NAMES, Gradients, LossReport, LossWeights, PhotometricConfig
from .terms import (
    depth_consistency_value_and_grad,
    depth_flow_value_and_grad,
    depth_smoothness_value_and_grad,
    flow_direction_keep,
    flow_direction_value_and_grad,
    photometric_value_and_grad,
    smoothness_value_and_grad,
)

logger = logging.getLogger(__name__)

DIRECTIONS = ("f", "b")
# (pose/flow index, target frame index) per direction
DIRECTION_INDEX = {"f": (0, 2), "b": (1, 0)}
PER_LEVEL_TERMS = [name for name in TERM_NAMES if name != "g"]


@dataclass
class LossVariables:
    """Depth (3, H, W) for frames (t−1, t, t+1), pose (2, 6), flow (2, H, W, 2)."""

    depth: np.ndarray
    pose: np.ndarray
    flow: np.ndarray

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=np.float64)
        self.pose = np.asarray(self.pose, dtype=np.float64)
        self.flow = np.asarray(self.flow, dtype=np.float64)
        if self.depth.ndim != 3 or self.depth.shape[0] != 3:
            raise FieldError(f"depth must be (3, H, W), got {self.depth.shape}")
        height, width = self.depth.shape[1:]
        if self.pose.shape != (2, 6):
            raise FieldError(f"pose must be (2, 6), got {self.pose.shape}")
        if self.flow.shape != (2, height, width, 2):
            raise FieldError(f"flow must be (2, {height}, {width}, 2), got {self.flow.shape}")

    def copy(self) -> "LossVariables":
        return LossVariables(self.depth.copy(), self.pose.copy(), self.flow.copy())

    @property
    def shape(self) -> Tuple[int, int]:
        return self.depth.shape[1:]


@dataclass
class LossInputs:
    """Constants of a loss evaluation: the image triple, camera and settings."""

    images: Sequence[ImageBuffer]
    intrinsics: Intrinsics
    photometric: PhotometricConfig = field(default_factory=PhotometricConfig)
    num_scales: int = OptimizerDefaults.NUM_SCALES.value
    levels: int = field(init=False)
    image_pyramid: List[List[np.ndarray]] = field(init=False)
    shapes: List[Tuple[int, int]] = field(init=False)

    def __post_init__(self):
        if len(self.images) != 3:
            raise FieldError("expected the image triple (t−1, t, t+1)")
        shape = self.images[0].data.shape
        for image in self.images:
            if image.data.shape != shape:
                raise FieldError(f"dimension mismatch: {shape} vs {image.data.shape}")
        height, width = shape[:2]
        self.levels = pyramid_levels(height, width, self.num_scales)
        self.image_pyramid = [[np.asarray(image.data) for image in self.images]]
        self.shapes = [(height, width)]
        for _ in range(1, self.levels):
            self.image_pyramid.append([downsample(img) for img in self.image_pyramid[-1]])
            self.shapes.append(self.image_pyramid[-1][0].shape[:2])


class LevelResult(NamedTuple):
    terms: Dict[str, float]
    counts: Dict[str, int]
    grads: Optional[Dict[str, Gradients]]
    structure: Optional[Dict[str, np.ndarray]]


def _pose_chain(g_coords: np.ndarray, rep, g_z: Optional[np.ndarray] = None):
    """Pull a gradient on (u', v') [and z'] back to D_t and the 6 pose params."""
    g_depth = np.einsum("hwi,hwi->hw", g_coords, rep.d_coords_d_depth)
    g_pose = np.einsum("hwi,hwik->k", g_coords, rep.d_coords_d_pose)
    if g_z is not None:
        g_depth += g_z * rep.d_z_d_depth
        g_pose += np.einsum("hw,hwk->k", g_z, rep.d_z_d_pose)
    return g_depth, g_pose


def _coord_grad(g_values: np.ndarray, sample) -> np.ndarray:
    return np.stack(
        [np.sum(g_values * sample.d_dx, axis=2), np.sum(g_values * sample.d_dy, axis=2)],
        axis=-1,
    )


def _floor_signature(coords: np.ndarray, in_bounds: np.ndarray) -> np.ndarray:
    return np.stack([np.floor(coords[..., 0]), np.floor(coords[..., 1]), in_bounds], axis=-1)


def evaluate_level(
    images: Sequence[np.ndarray],
    intrinsics: Intrinsics,
    depth: np.ndarray,
    pose: np.ndarray,
    flow: np.ndarray,
    masks: Dict[str, np.ndarray],
    cfg: PhotometricConfig,
    with_gradients: bool = True,
    with_structure: bool = False,
) -> LevelResult:
    """All per-level terms at one resolution.

    ``masks`` holds boolean arrays: depth_f/b, flow_f/b, dynamic,
    continuous_0/1/2 and keep.
    """
    height, width = depth.shape[1:]
    grid = pixel_grid(height, width)
    image_t = images[1]
    keep = masks["keep"]
    grads = {name: Gradients.zeros(height, width) for name in PER_LEVEL_TERMS}
    terms = {name: 0.0 for name in PER_LEVEL_TERMS}
    counts = {name: 0 for name in PER_LEVEL_TERMS}
    structure: Dict[str, np.ndarray] = {}

    for direction in DIRECTIONS:
        i, target = DIRECTION_INDEX[direction]
        pose_i = PoseSE3.from_params(pose[i])
        rep = reproject_field(
            depth[1], intrinsics, pose_i, with_jacobians=with_gradients, omega=pose[i, :3]
        )
        # blended coarse pixels never count as one surface
        guarded = np.where(masks[f"continuous_{target}"], depth[target], np.inf)
        same_surface = cell_ratio(guarded, rep.coords) <= cfg.edge_ratio
        mask_d = masks[f"depth_{direction}"] & masks["continuous_1"] & same_surface
        mask_d &= rep.valid & keep

        # photometric, depth/pose path
        img_sample = sample_array(images[target], rep.coords)
        value, count, g_w = photometric_value_and_grad(
            img_sample.values, image_t, ssim_support(mask_d), cfg
        )
        terms["ph_d"] += 0.5 * value
        counts["ph_d"] += count
        if with_gradients:
            g_dt, g_pose = _pose_chain(_coord_grad(g_w, img_sample), rep)
            grads["ph_d"].depth[1] += 0.5 * g_dt
            grads["ph_d"].pose[i] += 0.5 * g_pose

        # depth consistency
        dep_sample = sample_array(depth[target], rep.coords)
        sampled = dep_sample.values[..., 0]
        value, count, g_a, g_b = depth_consistency_value_and_grad(sampled, rep.depth, mask_d)
        terms["c_d"] += 0.5 * value
        counts["c_d"] += count
        if with_gradients:
            g_coords = _coord_grad(g_a[..., None], dep_sample)
            g_dt, g_pose = _pose_chain(g_coords, rep, g_z=g_b)
            grads["c_d"].depth[1] += 0.5 * g_dt
            grads["c_d"].pose[i] += 0.5 * g_pose
            grads["c_d"].depth[target] += 0.5 * sample_array_adjoint(
                g_a, rep.coords, (height, width)
            )

        # depth-flow consistency
        coords_flow = grid + flow[i]
        value, count, g_cf, g_cdp = depth_flow_value_and_grad(coords_flow, rep.coords, mask_d)
        terms["c_df"] += 0.5 * value
        counts["c_df"] += count
        if with_gradients:
            g_dt, g_pose = _pose_chain(g_cdp, rep)
            grads["c_df"].depth[1] += 0.5 * g_dt
            grads["c_df"].pose[i] += 0.5 * g_pose
            grads["c_df"].flow[i] += 0.5 * g_cf

        # photometric, flow path
        flow_sample = sample_array(images[target], coords_flow)
        mask_f = ssim_support(masks[f"flow_{direction}"] & flow_sample.in_bounds & keep)
        value, count, g_w = photometric_value_and_grad(
            flow_sample.values, image_t, mask_f, cfg
        )
        terms["ph_f"] += 0.5 * value
        counts["ph_f"] += count
        if with_gradients:
            grads["ph_f"].flow[i] += 0.5 * _coord_grad(g_w, flow_sample)

        if with_structure:
            structure[f"dp_{direction}"] = np.concatenate(
                [
                    _floor_signature(rep.coords, rep.in_bounds),
                    rep.front[..., None],
                    same_surface[..., None],
                    masks["continuous_1"][..., None],
                    np.sign(img_sample.values - image_t),
                    np.sign(sampled - rep.depth)[..., None],
                    np.sign(coords_flow - rep.coords),
                ],
                axis=-1,
            )
            structure[f"flow_{direction}"] = np.concatenate(
                [
                    _floor_signature(coords_flow, flow_sample.in_bounds),
                    np.sign(flow_sample.values - image_t),
                ],
                axis=-1,
            )

    # flow-direction consistency
    dynamic = masks["dynamic"] & keep
    value, count, g_f, g_b = flow_direction_value_and_grad(
        flow[0], flow[1], dynamic, cfg.flow_epsilon
    )
    terms["c_f"] = value
    counts["c_f"] = count
    if with_gradients:
        grads["c_f"].flow[0] += g_f
        grads["c_f"].flow[1] += g_b

    # smoothness
    for k in range(3):
        value, g = depth_smoothness_value_and_grad(depth[k], images[k], cfg.alpha_s, keep)
        terms["s_d"] += value / 3.0
        if with_gradients:
            grads["s_d"].depth[k] += g / 3.0
    for i in range(2):
        value, g = smoothness_value_and_grad(flow[i], image_t, cfg.alpha_s, keep)
        terms["s_f"] += value / 2.0
        if with_gradients:
            grads["s_f"].flow[i] += g / 2.0
    counts["s_d"] = counts["s_f"] = int(keep.sum())

    if with_structure:
        inv = []
        for i in range(2):
            total = flow[i] / np.maximum(np.sum(flow[i] ** 2, axis=-1), 1e-300)[..., None]
            inv.append(total)
        structure["c_f"] = np.concatenate(
            [
                flow_direction_keep(flow[0], flow[1], None, cfg.flow_epsilon)[..., None],
                np.sign(inv[0] + inv[1]),
            ],
            axis=-1,
        )
        smooth = []
        for k in range(3):
            dxx, dyy = second_difference_array(depth[k] / depth[k].mean())
            smooth += [np.sign(dxx), np.sign(dyy)]
        for i in range(2):
            dxx, dyy = second_difference_array(flow[i])
            smooth += [np.sign(dxx), np.sign(dyy)]
        structure["smooth"] = np.concatenate(
            [s[..., None] if s.ndim == 2 else s for s in smooth], axis=-1
        )

    return LevelResult(terms, counts, grads if with_gradients else None, structure or None)


def _repeat_down(array: np.ndarray, times: int, reducer) -> np.ndarray:
    for _ in range(times):
        array = reducer(array)
    return array


def level_masks(
    masks: MaskSet,
    keep: Optional[np.ndarray],
    levels: int,
    depth_levels: Optional[Sequence[np.ndarray]] = None,
    edge_ratio: float = np.inf,
) -> List[Dict[str, np.ndarray]]:
    """Combined boolean masks per pyramid level (min-pooled).

    ``depth_levels`` is the (3, h, w) depth pyramid. ``continuous_k`` marks
    the coarse pixels of frame k whose whole full-resolution footprint lies
    on one surface: every 2x2 block on the way down has a max/min depth
    ratio within ``edge_ratio``.
    """
    base = {
        "depth_f": masks.forward.depth_mask.as_bool(),
        "depth_b": masks.backward.depth_mask.as_bool(),
        "flow_f": masks.forward.flow_mask.as_bool(),
        "flow_b": masks.backward.flow_mask.as_bool(),
        "dynamic": masks.flow_direction_mask.as_bool(),
    }
    height, width = base["depth_f"].shape
    base["keep"] = np.ones((height, width), dtype=bool) if keep is None else np.asarray(keep, bool)
    for k in range(3):
        base[f"continuous_{k}"] = np.ones((height, width), dtype=bool)
    out = [base]
    for level in range(1, levels):
        coarse = {k: downsample_mask(v).astype(bool) for k, v in out[-1].items()}
        if depth_levels is not None:
            for k in range(3):
                coarse[f"continuous_{k}"] &= block_ratio(depth_levels[level - 1][k]) <= edge_ratio
        out.append(coarse)
    return out


def variables_at_level(variables: LossVariables, level: int) -> Tuple[np.ndarray, np.ndarray]:
    depth = np.stack([_repeat_down(d, level, downsample) for d in variables.depth])
    flow = np.stack([_repeat_down(f, level, downsample) for f in variables.flow]) / 2.0**level
    return depth, flow


def _lift(g: Gradients, level: int, shapes: List[Tuple[int, int]]) -> Gradients:
    """Adjoint of ``variables_at_level`` applied to a level gradient."""
    depth = g.depth
    flow = g.flow
    for j in range(level, 0, -1):
        fine = shapes[j - 1]
        depth = np.stack([downsample_adjoint(d, fine) for d in depth])
        flow = np.stack([downsample_adjoint(f, fine + (2,)) for f in flow])
    return Gradients(depth, g.pose, flow / 2.0**level)


def _check_finite(terms: Dict[str, float]) -> None:
    for name, value in terms.items():
        if not np.isfinite(value):
            raise NumericalError(f"loss term {name} is not finite ({value})", term=name)


def total_loss(
    inputs: LossInputs,
    variables: LossVariables,
    weights: LossWeights,
    masks: MaskSet,
    f_est: Optional[Sequence[Optional[np.ndarray]]] = None,
    keep: Optional[np.ndarray] = None,
    with_gradients: bool = False,
    per_term: bool = False,
) -> LossReport:
    """Weighted total over all pyramid levels, averaged with equal level weights.

    ``f_est`` holds the frozen estimated fundamental matrix per direction
    (forward, backward); a missing entry skips that half of the epipolar term.
    """
    shapes = inputs.shapes
    if tuple(variables.shape) != tuple(shapes[0]):
        raise FieldError(f"dimension mismatch: variables {variables.shape} vs images {shapes[0]}")
    pyramid = [variables_at_level(variables, level) for level in range(inputs.levels)]
    per_level_masks = level_masks(
        masks,
        keep,
        inputs.levels,
        depth_levels=[depth for depth, _ in pyramid],
        edge_ratio=inputs.photometric.edge_ratio,
    )

    def run(level: int) -> LevelResult:
        depth, flow = pyramid[level]
        return evaluate_level(
            inputs.image_pyramid[level],
            inputs.intrinsics.scaled(level),
            depth,
            variables.pose,
            flow,
            per_level_masks[level],
            inputs.photometric,
            with_gradients=with_gradients,
        )

    workers = min(get_max_workers(), inputs.levels)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(inputs.levels)))
    else:
        results = [run(level) for level in range(inputs.levels)]

    n_levels = float(inputs.levels)
    terms = {name: sum(r.terms[name] for r in results) / n_levels for name in PER_LEVEL_TERMS}
    counts = {name: sum(r.counts[name] for r in results) for name in PER_LEVEL_TERMS}
    height, width = shapes[0]
    term_grads: Dict[str, Gradients] = {}
    if with_gradients:
        for name in PER_LEVEL_TERMS:
            acc = Gradients.zeros(height, width)
            for level, result in enumerate(results):
                acc = acc + _lift(result.grads[name], level, shapes)
            term_grads[name] = acc.scaled(1.0 / n_levels)

    # epipolar term, once at full resolution
    degenerate: List[str] = []
    terms["g"] = 0.0
    counts["g"] = 0
    g_grad = Gradients.zeros(height, width)
    for direction in DIRECTIONS:
        i, _ = DIRECTION_INDEX[direction]
        estimate = None if f_est is None else f_est[i]
        if estimate is None:
            continue
        value, grad, skipped = epipolar_value_and_grad(
            variables.pose[i], inputs.intrinsics, estimate
        )
        if skipped:
            degenerate.append(f"g_{direction}")
            continue
        terms["g"] += 0.5 * value
        counts["g"] += 1
        g_grad.pose[i] += 0.5 * grad
    term_grads["g"] = g_grad

    for name in TERM_NAMES:
        if counts[name] == 0 and getattr(weights, name) > 0:
            degenerate.append(name)
    if degenerate:
        logger.warning(f"degenerate loss terms (empty masks or skipped): {degenerate}")
    terms = {name: terms[name] for name in TERM_NAMES}
    _check_finite(terms)
    total = float(sum(getattr(weights, name) * terms[name] for name in TERM_NAMES))

    gradients = None
    if with_gradients:
        gradients = Gradients.zeros(height, width)
        for name in TERM_NAMES:
            weight = getattr(weights, name)
            if weight > 0:
                gradients = gradients + term_grads[name].scaled(weight)
        if not gradients.is_finite():
            raise NumericalError("non-finite gradient", term="total")

    return LossReport(
        terms=terms,
        total=total,
        weights=weights,
        counts=counts,
        degenerate=degenerate,
        gradients=gradients,
        term_gradients=term_grads if (with_gradients and per_term) else None,
    )


def gradients(
    inputs: LossInputs,
    variables: LossVariables,
    weights: LossWeights,
    masks: MaskSet,
    f_est: Optional[Sequence[Optional[np.ndarray]]] = None,
    targets: Sequence[str] = ("depth", "pose", "flow"),
    keep: Optional[np.ndarray] = None,
) -> Gradients:
    """Analytic gradient of the total loss, zeroed outside ``targets``."""
    report = total_loss(
        inputs, variables, weights, masks, f_est=f_est, keep=keep, with_gradients=True
    )
    grad = report.gradients
    return Gradients(
        grad.depth if "depth" in targets else np.zeros_like(grad.depth),
        grad.pose if "pose" in targets else np.zeros_like(grad.pose),
        grad.flow if "flow" in targets else np.zeros_like(grad.flow),
    )


def structure_maps(
    inputs: LossInputs,
    variables: LossVariables,
    masks: MaskSet,
    f_est: Optional[Sequence[Optional[np.ndarray]]] = None,
) -> Tuple[List[Dict[str, np.ndarray]], np.ndarray]:
    """Piecewise-structure signatures per level, plus the epipolar signature."""
    pyramid = [variables_at_level(variables, level) for level in range(inputs.levels)]
    per_level_masks = level_masks(
        masks,
        None,
        inputs.levels,
        depth_levels=[depth for depth, _ in pyramid],
        edge_ratio=inputs.photometric.edge_ratio,
    )
    maps = []
    for level, (depth, flow) in enumerate(pyramid):
        result = evaluate_level(
            inputs.image_pyramid[level],
            inputs.intrinsics.scaled(level),
            depth,
            variables.pose,
            flow,
            per_level_masks[level],
            inputs.photometric,
            with_gradients=False,
            with_structure=True,
        )
        maps.append(result.structure)
    epi = []
    for i in range(2):
        estimate = None if f_est is None else f_est[i]
        if estimate is not None and np.linalg.norm(variables.pose[i, 3:]) >= 1e-6:
            epi.append(epipolar_structure(variables.pose[i], inputs.intrinsics, estimate))
    return maps, np.concatenate(epi) if epi else np.zeros(0)
