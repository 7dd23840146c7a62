"""Flow, depth and odometry benchmark metrics.

Reductions use exactly rounded sums so every value is independent of pixel
and snippet order.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Mapping, Optional

import numpy as np

from geowarp.config.constants import MetricDefaults
from geowarp.config.env_loader import get_max_workers
from geowarp.core.exceptions import FieldError
from geowarp.core.fields.models import MaskField, ScalarField, VectorField, require_same_shape

from .models import (
    AteResult,
    DepthMetrics,
    FlowGroundTruth,
    FlowMetrics,
    TrajectoryFile,
    require_flow_shape,
)

logger = logging.getLogger(__name__)

ALIGNMENTS = ("scale", "umeyama")


def exact_mean(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    return math.fsum(values.tolist()) / len(values)


def flow_metrics(
    pred: VectorField,
    gt: FlowGroundTruth,
    regions: Optional[Mapping[str, MaskField]] = None,
    outlier_pixels: float = MetricDefaults.OUTLIER_PIXELS.value,
    outlier_ratio: float = MetricDefaults.OUTLIER_RATIO.value,
) -> FlowMetrics:
    """EPE and Fl (percent) over every region ``gt`` defines plus any extra ``regions``.

    A pixel is an outlier when its end-point error exceeds both ``outlier_pixels``
    and ``outlier_ratio`` times the ground-truth magnitude.
    """
    require_flow_shape(pred, gt)
    selections = gt.regions()
    valid = selections["all"]
    for name, mask in (regions or {}).items():
        require_same_shape(mask.shape, gt.shape)
        selections[name] = valid & mask.as_bool()

    error = np.linalg.norm(pred.data - gt.flow.data, axis=-1)
    magnitude = np.linalg.norm(gt.flow.data, axis=-1)
    outlier = (error > outlier_pixels) & (error > outlier_ratio * magnitude)

    epe, outliers, counts = {}, {}, {}
    for name, selection in selections.items():
        counts[name] = int(selection.sum())
        if counts[name] == 0:
            logger.warning(f"flow region {name!r} has no valid pixels")
            epe[name] = outliers[name] = None
            continue
        epe[name] = exact_mean(error[selection])
        outliers[name] = 100.0 * int(outlier[selection].sum()) / counts[name]
    return FlowMetrics(epe, outliers, counts)


def depth_metrics(
    pred: ScalarField,
    gt: ScalarField,
    cap: float = MetricDefaults.DEPTH_CAP.value,
    median_scaling: bool = MetricDefaults.MEDIAN_SCALING.value,
    min_depth: float = MetricDefaults.DEPTH_MIN.value,
) -> DepthMetrics:
    """Eigen-split error and accuracy metrics over pixels with ``min_depth < gt < cap``.

    With ``median_scaling`` the prediction is multiplied by median(gt)/median(pred)
    first; predictions are then clamped to [min_depth, cap].
    """
    require_same_shape(pred.shape, gt.shape)
    truth = np.asarray(gt.data, dtype=np.float64)
    valid = (truth > min_depth) & (truth < cap)
    if not valid.any():
        raise FieldError("depth ground truth has no valid pixels")
    truth = truth[valid]
    estimate = np.asarray(pred.data, dtype=np.float64)[valid]

    scale = 1.0
    if median_scaling:
        pred_median = float(np.median(estimate))
        if pred_median <= 0:
            raise FieldError("median of the predicted depth must be positive")
        scale = float(np.median(truth)) / pred_median
        estimate = estimate * scale
    estimate = np.clip(estimate, min_depth, cap)

    ratio = np.maximum(truth / estimate, estimate / truth)
    count = int(valid.sum())
    return DepthMetrics(
        abs_rel=exact_mean(np.abs(truth - estimate) / truth),
        sq_rel=exact_mean((truth - estimate) ** 2 / truth),
        rmse=math.sqrt(exact_mean((truth - estimate) ** 2)),
        rmse_log=math.sqrt(exact_mean((np.log(truth) - np.log(estimate)) ** 2)),
        a1=int((ratio < 1.25).sum()) / count,
        a2=int((ratio < 1.25**2).sum()) / count,
        a3=int((ratio < 1.25**3).sum()) / count,
        scale=scale,
        count=count,
    )


def scale_aligned_ate(pred: TrajectoryFile, gt: TrajectoryFile) -> float:
    """RMSE of translations after least-squares scale, both snippets anchored at their first frame."""
    pred_xyz = pred.relative_to_first().positions
    gt_xyz = gt.relative_to_first().positions
    denominator = math.fsum((pred_xyz**2).reshape(-1).tolist())
    scale = math.fsum((gt_xyz * pred_xyz).reshape(-1).tolist()) / denominator if denominator else 0.0
    residual = pred_xyz * scale - gt_xyz
    return math.sqrt(exact_mean(np.sum(residual**2, axis=1)))


def umeyama_alignment(source: np.ndarray, target: np.ndarray):
    """Similarity (s, R, t) minimising Σ‖s R source_i + t − target_i‖²."""
    mu_s, mu_t = source.mean(axis=0), target.mean(axis=0)
    src, dst = source - mu_s, target - mu_t
    covariance = dst.T @ src / len(source)
    u, singular, vt = np.linalg.svd(covariance)
    sign = np.eye(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        sign[2, 2] = -1.0
    rotation = u @ sign @ vt
    variance = np.sum(src**2) / len(source)
    scale = float(np.trace(np.diag(singular) @ sign) / variance) if variance > 0 else 0.0
    translation = mu_t - scale * rotation @ mu_s
    return scale, rotation, translation


def umeyama_ate(pred: TrajectoryFile, gt: TrajectoryFile) -> float:
    """RMSE of translations after a full similarity alignment of the snippet."""
    pred_xyz, gt_xyz = pred.positions, gt.positions
    scale, rotation, translation = umeyama_alignment(pred_xyz, gt_xyz)
    residual = scale * pred_xyz @ rotation.T + translation - gt_xyz
    return math.sqrt(exact_mean(np.sum(residual**2, axis=1)))


def odometry_ate(
    pred: TrajectoryFile,
    gt: TrajectoryFile,
    snippet_len: int = MetricDefaults.SNIPPET_LENGTH.value,
    alignment: str = "scale",
) -> AteResult:
    """Mean and std of the ATE over every ``snippet_len``-frame window (stride 1)."""
    if len(pred) != len(gt):
        raise ValueError(f"trajectory length mismatch: {len(pred)} predicted vs {len(gt)} ground truth")
    if snippet_len < 2 or len(gt) < snippet_len:
        raise ValueError(f"need at least snippet_len={snippet_len} ≥ 2 frames, got {len(gt)}")
    if alignment not in ALIGNMENTS:
        raise ValueError(f"alignment must be one of {ALIGNMENTS}, got {alignment!r}")
    snippet_ate = scale_aligned_ate if alignment == "scale" else umeyama_ate

    def window_error(start: int) -> float:
        return snippet_ate(pred.window(start, snippet_len), gt.window(start, snippet_len))

    starts = range(len(gt) - snippet_len + 1)
    with ThreadPoolExecutor(max_workers=get_max_workers()) as executor:
        errors = np.array(list(executor.map(window_error, starts)))

    mean = exact_mean(errors)
    std = math.sqrt(exact_mean((errors - mean) ** 2))
    logger.debug(f"ATE over {len(errors)} snippets: {mean:.6g} ± {std:.6g}")
    return AteResult(mean, std, errors, snippet_len, alignment)


def summarize_rows(rows: Dict[str, Dict[str, Optional[float]]]) -> Dict[str, Optional[float]]:
    """Column means over per-item metric rows, skipping missing values."""
    columns: Dict[str, list] = {}
    for row in rows.values():
        for name, value in row.items():
            columns.setdefault(name, [])
            if value is not None:
                columns[name].append(value)
    return {name: (exact_mean(np.array(v)) if v else None) for name, v in columns.items()}
