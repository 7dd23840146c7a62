"""Fundamental matrix from pose, normalized eight-point and RANSAC."""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from geowarp.config.constants import RansacDefaults
from geowarp.core.exceptions import (
    DegenerateMotionError,
    EstimationError,
    InsufficientCorrespondencesError,
)
from geowarp.core.fields.models import MaskField, VectorField, pixel_grid
from geowarp.core.geometry import Intrinsics, PoseSE3, skew

from .models import CorrespondenceSet, FundamentalMatrix, RansacConfig, enforce_rank2

logger = logging.getLogger(__name__)

MIN_CORRESPONDENCES = 8
DESIGN_RANK_TOLERANCE = 1e-10


def raw_fundamental(rotation: np.ndarray, translation: np.ndarray, intrinsics: Intrinsics) -> np.ndarray:
    k_inv = intrinsics.inverse
    return k_inv.T @ skew(translation) @ rotation @ k_inv


def fundamental_from_pose(pose: PoseSE3, intrinsics: Intrinsics) -> FundamentalMatrix:
    """F = K⁻ᵀ [t]x R K⁻¹ for p' in the frame reached by ``pose``."""
    if np.linalg.norm(pose.translation) < RansacDefaults.MIN_TRANSLATION.value:
        raise DegenerateMotionError("pure rotation: translation below 1e-6")
    return FundamentalMatrix.from_raw(
        raw_fundamental(pose.rotation, pose.translation, intrinsics), enforce_rank=False
    )


def hartley_transform(points: np.ndarray) -> np.ndarray:
    """Similarity moving the centroid to 0 and the mean distance to √2."""
    centroid = points.mean(axis=0)
    mean_dist = np.mean(np.linalg.norm(points - centroid, axis=1))
    if mean_dist == 0:
        raise EstimationError("all correspondences coincide")
    scale = np.sqrt(2.0) / mean_dist
    return np.array(
        [
            [scale, 0.0, -scale * centroid[0]],
            [0.0, scale, -scale * centroid[1]],
            [0.0, 0.0, 1.0],
        ]
    )


def _homogeneous(points: np.ndarray) -> np.ndarray:
    return np.column_stack([points, np.ones(len(points))])


def _apply(transform: np.ndarray, points: np.ndarray) -> np.ndarray:
    return (_homogeneous(points) @ transform.T)[:, :2]


def _solve_normalized(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Rank-2 F̂ from already normalized points."""
    x, y = src[:, 0], src[:, 1]
    xp, yp = dst[:, 0], dst[:, 1]
    design = np.column_stack(
        [xp * x, xp * y, xp, yp * x, yp * y, yp, x, y, np.ones(len(x))]
    )
    _, s, vt = np.linalg.svd(design, full_matrices=True)
    if len(s) < 8 or s[7] <= DESIGN_RANK_TOLERANCE * s[0]:
        raise EstimationError("degenerate correspondence configuration (design rank < 8)")
    return enforce_rank2(vt[-1].reshape(3, 3))


def eight_point(corr: CorrespondenceSet) -> FundamentalMatrix:
    """Hartley-normalized eight-point estimate."""
    if len(corr) < MIN_CORRESPONDENCES:
        raise InsufficientCorrespondencesError(
            f"eight-point needs >= {MIN_CORRESPONDENCES} pairs, got {len(corr)}"
        )
    t_src = hartley_transform(corr.src)
    t_dst = hartley_transform(corr.dst)
    f_norm = _solve_normalized(_apply(t_src, corr.src), _apply(t_dst, corr.dst))
    return FundamentalMatrix.from_raw(t_dst.T @ f_norm @ t_src)


def _sampson(f: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    p = _homogeneous(src)
    q = _homogeneous(dst)
    fp = p @ f.T
    ftq = q @ f
    num = np.einsum("ni,ni->n", q, fp) ** 2
    den = fp[:, 0] ** 2 + fp[:, 1] ** 2 + ftq[:, 0] ** 2 + ftq[:, 1] ** 2
    return num / np.maximum(den, np.finfo(float).tiny)


def sampson_errors(
    fundamental: FundamentalMatrix,
    corr: CorrespondenceSet,
    transforms: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> np.ndarray:
    """Squared first-order epipolar error in Hartley-normalized coordinates."""
    t_src, t_dst = transforms or (hartley_transform(corr.src), hartley_transform(corr.dst))
    f_norm = np.linalg.inv(t_dst).T @ fundamental.matrix @ np.linalg.inv(t_src)
    return _sampson(f_norm, _apply(t_src, corr.src), _apply(t_dst, corr.dst))


def _required_iterations(inlier_fraction: float, confidence: float, cap: int) -> int:
    if inlier_fraction >= 1.0:
        return 0
    good_sample = inlier_fraction**MIN_CORRESPONDENCES
    if good_sample <= 0.0:
        return cap
    return int(min(cap, np.ceil(np.log(1.0 - confidence) / np.log(1.0 - good_sample))))


def ransac_fundamental(
    corr: CorrespondenceSet, cfg: Optional[RansacConfig] = None
) -> Tuple[FundamentalMatrix, np.ndarray]:
    """Robust F and the boolean inlier mask; deterministic for a fixed seed.

    Ties in consensus size keep the earliest iteration.
    """
    cfg = cfg or RansacConfig()
    n = len(corr)
    if n < MIN_CORRESPONDENCES:
        raise InsufficientCorrespondencesError(
            f"RANSAC needs >= {MIN_CORRESPONDENCES} pairs, got {n}"
        )
    transforms = (hartley_transform(corr.src), hartley_transform(corr.dst))
    rng = np.random.default_rng(cfg.seed)
    best_f: Optional[FundamentalMatrix] = None
    best_inliers = np.zeros(n, dtype=bool)
    needed = cfg.max_iterations
    iteration = 0
    while iteration < min(needed, cfg.max_iterations):
        sample = rng.choice(n, MIN_CORRESPONDENCES, replace=False)
        iteration += 1
        try:
            candidate = eight_point(corr.subset(sample))
        except EstimationError:
            continue
        inliers = sampson_errors(candidate, corr, transforms) < cfg.sampson_threshold
        if inliers.sum() > best_inliers.sum():
            best_f, best_inliers = candidate, inliers
            needed = _required_iterations(inliers.mean(), cfg.confidence, cfg.max_iterations)

    if best_f is None or best_inliers.mean() < cfg.min_inlier_fraction:
        fraction = 0.0 if best_f is None else float(best_inliers.mean())
        raise EstimationError(
            f"RANSAC failed: best inlier fraction {fraction:.3f} < {cfg.min_inlier_fraction}"
        )

    for _ in range(2):
        if best_inliers.sum() < MIN_CORRESPONDENCES:
            break
        try:
            refit = eight_point(corr.subset(np.flatnonzero(best_inliers)))
        except EstimationError:
            break
        best_f = refit
        best_inliers = sampson_errors(refit, corr, transforms) < cfg.sampson_threshold

    logger.debug(
        f"RANSAC: {iteration} iterations, {int(best_inliers.sum())}/{n} inliers"
    )
    return best_f, best_inliers


def sample_correspondences(
    flow: VectorField,
    masks: Sequence[MaskField],
    n: int,
    seed: int = RansacDefaults.SEED.value,
) -> CorrespondenceSet:
    """Draw ``n`` eligible pixels uniformly without replacement; p' = p + F(p).

    Eligible pixels are kept by every mask and have an in-bounds target.
    """
    grid = pixel_grid(flow.height, flow.width)
    target = grid + flow.data
    eligible = np.ones(flow.shape, dtype=bool)
    for mask in masks:
        eligible &= mask.as_bool()
    eligible &= (
        (target[..., 0] >= 0)
        & (target[..., 0] <= flow.width - 1)
        & (target[..., 1] >= 0)
        & (target[..., 1] <= flow.height - 1)
    )
    index = np.flatnonzero(eligible)
    if len(index) < MIN_CORRESPONDENCES:
        raise InsufficientCorrespondencesError(
            f"only {len(index)} eligible pixels, need >= {MIN_CORRESPONDENCES}"
        )
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(index, size=min(n, len(index)), replace=False))
    src = grid.reshape(-1, 2)[chosen]
    dst = target.reshape(-1, 2)[chosen]
    return CorrespondenceSet(src, dst, pixel_index=chosen, provenance="flow")


def estimate_from_flow(
    flow: VectorField,
    masks: Sequence[MaskField],
    cfg: Optional[RansacConfig] = None,
) -> Optional[FundamentalMatrix]:
    """RANSAC F from flow correspondences, or None (with a warning) when estimation fails."""
    cfg = cfg or RansacConfig()
    try:
        corr = sample_correspondences(flow, masks, cfg.sample_count, cfg.seed)
        fundamental, _ = ransac_fundamental(corr, cfg)
    except EstimationError as exc:
        logger.warning(f"fundamental matrix estimation failed: {exc}")
        return None
    return fundamental
