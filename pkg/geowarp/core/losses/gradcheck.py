"""Central finite-difference check of every (term, target) gradient pair.

Masks and the estimated F are frozen. Pixels whose piecewise structure
changes inside the ±step stencil (bilinear cell, in-bounds flag, sign of an
absolute-value argument) are removed from the frozen masks together with
their 3×3 neighbourhood, at every pyramid level.
"""

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.ndimage import binary_dilation

from geowarp.config.constants import GradientCheckDefaults
from geowarp.core.epipolar import estimate_from_flow
from geowarp.core.exceptions import EstimationError
from geowarp.core.fields.models import ScalarField, VectorField
from geowarp.core.geometry import PoseSE3, skew
from geowarp.core.masks import compute_masks
from geowarp.core.scene import gradcheck_scene, ground_truth_arrays, render

from .models import TERM_NAMES, LossWeights
from .total import LossInputs, LossVariables, structure_maps, total_loss

logger = logging.getLogger(__name__)

TARGETS = ("depth", "pose", "flow")
F_SEPARATION = 5e-3
MAX_POSE_DRAWS = 50

AnalyticHook = Callable[[str, str, Tuple[int, ...], float], float]


@dataclass
class GradientCheckEntry:
    term: str
    target: str
    index: Tuple[int, ...]
    analytic: float
    numeric: float
    relative_error: float = 0.0
    skipped: bool = False


@dataclass
class GradientCheckReport:
    seed: int
    step: float
    tolerance: float
    entries: List[GradientCheckEntry]
    max_errors: Dict[str, float]
    removed_pixels: int
    seconds: float = 0.0
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> Dict:
        return {
            "seed": self.seed,
            "step": self.step,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "max_errors": dict(self.max_errors),
            "failures": list(self.failures),
            "removed_pixels": self.removed_pixels,
            "checked": sum(not e.skipped for e in self.entries),
            "skipped": sum(e.skipped for e in self.entries),
            "seconds": self.seconds,
            "entries": [
                {**asdict(e), "index": list(e.index)} for e in self.entries if not e.skipped
            ],
        }


def relative_error(analytic: float, numeric: float, scale: float) -> float:
    if analytic == numeric:
        return 0.0
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6 * scale)


def _fundamental_gaps(pose: np.ndarray, inputs: LossInputs, f_est) -> float:
    """Smallest margin of the piecewise structure of L_g at ``pose``."""
    k_inv = inputs.intrinsics.inverse
    margin = np.inf
    for i in range(2):
        if f_est[i] is None:
            continue
        motion = PoseSE3.from_params(pose[i])
        raw = k_inv.T @ skew(motion.translation) @ motion.rotation @ k_inv
        top = np.sort(np.abs(raw).ravel())[::-1] / np.linalg.norm(raw)
        f_cal = raw / np.linalg.norm(raw)
        f_cal = f_cal * (1.0 if raw.flat[np.argmax(np.abs(raw))] >= 0 else -1.0)
        margin = min(margin, np.abs(f_cal - f_est[i]).min(), top[0] - top[1])
    return margin


def _build_problem(seed: int, num_scales: int):
    spec = gradcheck_scene()
    frames = render(spec)
    truth = ground_truth_arrays(frames)
    inputs = LossInputs(
        images=[frame.image for frame in frames],
        intrinsics=spec.intrinsics,
        num_scales=num_scales,
    )
    centre = frames[1]
    f_est = []
    for flow, valid in (
        (centre.flow_forward, centre.valid_forward),
        (centre.flow_backward, centre.valid_backward),
    ):
        estimate = estimate_from_flow(flow, [valid])
        f_est.append(None if estimate is None else estimate.matrix)
    if all(f is None for f in f_est):
        raise EstimationError("no fundamental matrix could be estimated on the check scene")

    rng = np.random.default_rng(seed)
    depth = truth.depth * (1.0 + 0.05 * rng.standard_normal(truth.depth.shape))
    flow = truth.flow + 0.3 * rng.standard_normal(truth.flow.shape)
    pose = truth.pose
    for _ in range(MAX_POSE_DRAWS):
        noise = np.concatenate(
            [0.01 * rng.standard_normal((2, 3)), 0.02 * rng.standard_normal((2, 3))], axis=1
        )
        pose = truth.pose + noise
        if _fundamental_gaps(pose, inputs, f_est) > F_SEPARATION:
            break
    else:
        logger.warning("could not separate F_cal from F_est; epipolar entries may be skipped")

    variables = LossVariables(depth, pose, flow)
    masks = compute_masks(
        inputs.images,
        ScalarField(depth[1], role="depth"),
        PoseSE3.from_params(pose[0]),
        PoseSE3.from_params(pose[1]),
        VectorField(flow[0]),
        VectorField(flow[1]),
        inputs.intrinsics,
    )
    return inputs, variables, masks, f_est, rng


def _entries(rng: np.random.Generator, shape: Tuple[int, int], per_field: int):
    height, width = shape
    out = []
    for frame in range(3):
        for flat in rng.choice(height * width, per_field, replace=False):
            out.append(("depth", (frame,) + tuple(np.unravel_index(int(flat), shape))))
    for i in range(2):
        for j in range(6):
            out.append(("pose", (i, j)))
    for i in range(2):
        for flat in rng.choice(height * width, per_field, replace=False):
            y, x = np.unravel_index(int(flat), shape)
            for c in range(2):
                out.append(("flow", (i, int(y), int(x), c)))
    return out


def _shifted(variables: LossVariables, target: str, index, delta: float) -> LossVariables:
    out = variables.copy()
    getattr(out, target)[index] += delta
    return out


def _flip_map(base, other) -> np.ndarray:
    flips = None
    for key, value in base.items():
        changed = np.any(value != other[key], axis=-1)
        flips = changed if flips is None else flips | changed
    return flips


def _removal(base_maps, plus_maps, minus_maps, shape) -> np.ndarray:
    """Full-resolution pixels to drop: dilated structure flips of every level."""
    removal = np.zeros(shape, dtype=bool)
    for level, base in enumerate(base_maps):
        flips = _flip_map(base, plus_maps[level]) | _flip_map(base, minus_maps[level])
        if not flips.any():
            continue
        flips = binary_dilation(flips, structure=np.ones((3, 3), dtype=bool))
        factor = 2**level
        fine = np.repeat(np.repeat(flips, factor, axis=0), factor, axis=1)
        removal[: fine.shape[0], : fine.shape[1]] |= fine
    return removal


def _value(report, term: str) -> float:
    return report.total if term == "total" else report.terms[term]


def _analytic(report, term: str, target: str, index) -> float:
    grads = report.gradients if term == "total" else report.term_gradients[term]
    return float(getattr(grads, target)[index])


def gradient_check(
    seed: int = 0,
    step: float = GradientCheckDefaults.STEP.value,
    tolerance: float = GradientCheckDefaults.TOLERANCE.value,
    pixels_per_field: int = GradientCheckDefaults.PIXELS_PER_FIELD.value,
    num_scales: int = GradientCheckDefaults.NUM_SCALES.value,
    perturb_analytic: Optional[AnalyticHook] = None,
) -> GradientCheckReport:
    """Analytic vs central-difference gradients on the seeded 16×24 check scene.

    ``perturb_analytic(term, target, index, value)`` may replace an analytic
    value before comparison.
    """
    started = time.perf_counter()
    inputs, variables, masks, f_est, rng = _build_problem(seed, num_scales)
    weights = LossWeights.from_vector([1.0] * len(TERM_NAMES))
    base_maps, base_epi = structure_maps(inputs, variables, masks, f_est)
    shape = inputs.shapes[0]
    names = list(TERM_NAMES) + ["total"]

    entries: List[GradientCheckEntry] = []
    removed = 0
    for target, index in _entries(rng, shape, pixels_per_field):
        plus = _shifted(variables, target, index, step)
        minus = _shifted(variables, target, index, -step)
        plus_maps, plus_epi = structure_maps(inputs, plus, masks, f_est)
        minus_maps, minus_epi = structure_maps(inputs, minus, masks, f_est)
        removal = _removal(base_maps, plus_maps, minus_maps, shape)
        removed += int(removal.sum())
        keep = ~removal
        epi_stable = np.array_equal(base_epi, plus_epi) and np.array_equal(base_epi, minus_epi)

        report = total_loss(
            inputs, variables, weights, masks, f_est=f_est, keep=keep,
            with_gradients=True, per_term=True,
        )
        report_plus = total_loss(inputs, plus, weights, masks, f_est=f_est, keep=keep)
        report_minus = total_loss(inputs, minus, weights, masks, f_est=f_est, keep=keep)
        for term in names:
            analytic = _analytic(report, term, target, index)
            if perturb_analytic is not None:
                analytic = perturb_analytic(term, target, index, analytic)
            numeric = (_value(report_plus, term) - _value(report_minus, term)) / (2.0 * step)
            skipped = term in ("g", "total") and not epi_stable
            entries.append(
                GradientCheckEntry(
                    term, target, tuple(int(i) for i in index), analytic, numeric, skipped=skipped
                )
            )

    max_errors: Dict[str, float] = {}
    failures: List[str] = []
    for term in names:
        for target in TARGETS:
            group = [e for e in entries if e.term == term and e.target == target and not e.skipped]
            if not group:
                continue
            scale = max(max(abs(e.analytic), abs(e.numeric)) for e in group)
            for e in group:
                e.relative_error = relative_error(e.analytic, e.numeric, scale)
            key = f"{term}/{target}"
            max_errors[key] = max(e.relative_error for e in group)
            if max_errors[key] >= tolerance:
                failures.append(key)

    seconds = time.perf_counter() - started
    logger.info(
        f"gradient check seed={seed}: {len(entries)} entries, "
        f"{len(failures)} failing pairs, {seconds:.1f}s"
    )
    return GradientCheckReport(
        seed=seed,
        step=step,
        tolerance=tolerance,
        entries=entries,
        max_errors=max_errors,
        removed_pixels=removed,
        seconds=seconds,
        failures=failures,
    )
