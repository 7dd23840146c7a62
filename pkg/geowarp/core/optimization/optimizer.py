"""Staged direct optimization of depth, pose and flow against the total loss."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from geowarp.config.constants import AblationVariants, LossConstants, OptimizerDefaults
from geowarp.config.env_loader import get_stage_iterations
from geowarp.core.attention import (
    CorrectionHead,
    FusionResult,
    MotionDescriptor,
    pose_correction_fuse,
)
from geowarp.core.epipolar import estimate_from_flow
from geowarp.core.exceptions import NumericalError, OptimizationAborted
from geowarp.core.fields.models import ImageBuffer, ScalarField, VectorField
from geowarp.core.geometry import Intrinsics, PoseSE3
from geowarp.core.losses.models import LossWeights
from geowarp.core.losses.total import LossInputs, total_loss
from geowarp.core.masks import MaskSet, compute_masks

from .models import (
    GROUPS,
    MIN_LOG_DEPTH,
    LossTrace,
    OptimizerConfig,
    StageSchedule,
    StageSpec,
    VariableSet,
)

logger = logging.getLogger(__name__)

DESCRIPTOR_FIELDS = ("forward", "backward", "w_q", "w_k", "w_v")
HEAD_FIELDS = ("weight", "bias")
ATTENTION_KEYS = tuple(f"attention_{name}" for name in DESCRIPTOR_FIELDS + HEAD_FIELDS)


class Adam:
    """First/second-moment updates with bias correction, one state per parameter group."""

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def step(
        self,
        params: Dict[str, np.ndarray],
        grads: Dict[str, np.ndarray],
        step_sizes: Dict[str, float],
    ) -> None:
        """Update ``params`` in place."""
        self.t += 1
        for name, grad in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(grad)
                self.v[name] = np.zeros_like(grad)
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * grad
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * grad**2
            m_hat = self.m[name] / (1.0 - self.beta1**self.t)
            v_hat = self.v[name] / (1.0 - self.beta2**self.t)
            params[name] -= step_sizes[name] * m_hat / (np.sqrt(v_hat) + self.epsilon)


def stage_schedule_default(
    iterations: Optional[int] = None,
    step_size: float = OptimizerDefaults.STEP_SIZE.value,
    final_step_size: Optional[float] = OptimizerDefaults.FINAL_STEP_SIZE.value,
) -> StageSchedule:
    """The three published stages; only stage 1 runs without the dynamic mask."""
    if iterations is None:
        iterations = get_stage_iterations()
    return StageSchedule(
        stages=[
            StageSpec(
                name=name,
                weights=LossWeights.for_stage(name),
                iterations=iterations,
                step_size=step_size,
                final_step_size=final_step_size,
                use_dynamic_mask=name != "stage1",
            )
            for name in LossConstants.STAGE_WEIGHTS
        ]
    )


def select_stages(schedule: StageSchedule, selection: str) -> StageSchedule:
    """Keep stages by 1-based index, e.g. ``"1,3"``."""
    try:
        indices = [int(token) for token in selection.split(",") if token.strip()]
    except ValueError:
        raise ValueError(f"stages must be comma-separated integers, got {selection!r}")
    if not indices or any(i < 1 or i > len(schedule.stages) for i in indices):
        raise ValueError(f"stage indices must lie in 1..{len(schedule.stages)}, got {selection!r}")
    return StageSchedule(stages=[schedule.stages[i - 1] for i in indices])


def apply_variant(
    schedule: StageSchedule, cfg: OptimizerConfig, variant: str
) -> Tuple[StageSchedule, OptimizerConfig]:
    """Zero the variant's disabled terms in every stage and set its attention flag."""
    if variant not in AblationVariants.ATTENTION:
        raise ValueError(f"unknown variant {variant!r}; expected one of {AblationVariants.names()}")
    disabled = {name: 0.0 for name in AblationVariants.DISABLED_TERMS[variant]}
    stages = [
        stage.model_copy(update={"weights": stage.weights.model_copy(update=disabled)})
        for stage in schedule.stages
    ]
    cfg = cfg.model_copy(update={"attention": AblationVariants.ATTENTION[variant]})
    logger.debug(f"variant {variant}: attention={cfg.attention}, disabled={sorted(disabled)}")
    return StageSchedule(stages=stages), cfg


@dataclass
class OptimizationResult:
    variables: VariableSet
    trace: LossTrace
    masks: MaskSet
    f_est: List[Optional[np.ndarray]]
    # (2, 6) attention correction inside variables.pose; None without attention
    correction: Optional[np.ndarray] = None


class _State:
    """Optimizer-side parameters: translation in units of the initial mean depth of frame t.

    With attention on, omega/tau hold the base poses and the attention block
    starts from a seeded descriptor and a zero head, so the first fused pose
    equals the initial pose.
    """

    def __init__(self, init: VariableSet, cfg: OptimizerConfig, seed: int = 0):
        self.translation_scale = float(np.mean(init.depth[1]))
        self.params = {
            "depth": init.log_depth.copy(),
            "omega": init.pose[:, :3].copy(),
            "tau": init.pose[:, 3:] / self.translation_scale,
            "flow": init.flow.copy(),
        }
        self.attention = cfg.attention
        if self.attention:
            desc = MotionDescriptor.random(cfg.attention_config, seed)
            head = CorrectionHead.zeros(desc.d_v)
            for name in DESCRIPTOR_FIELDS:
                self.params[f"attention_{name}"] = np.array(getattr(desc, name))
            for name in HEAD_FIELDS:
                self.params[f"attention_{name}"] = np.array(getattr(head, name))

    def base_pose(self) -> np.ndarray:
        return np.concatenate(
            [self.params["omega"], self.params["tau"] * self.translation_scale], axis=1
        )

    def fusion(self, with_jacobians: bool = False) -> Optional[FusionResult]:
        if not self.attention:
            return None
        desc = MotionDescriptor(*(self.params[f"attention_{name}"] for name in DESCRIPTOR_FIELDS))
        head = CorrectionHead(*(self.params[f"attention_{name}"] for name in HEAD_FIELDS))
        base = self.base_pose()
        return pose_correction_fuse(desc, head, base[0], base[1], with_jacobians=with_jacobians)

    def variables(self, fusion: Optional[FusionResult] = None) -> VariableSet:
        fusion = fusion or self.fusion()
        if fusion is None:
            pose = self.base_pose()
        else:
            pose = np.stack([fusion.forward, fusion.backward])
        return VariableSet(self.params["depth"], pose, self.params["flow"])


def refresh_masks(
    images: Sequence[ImageBuffer],
    intrinsics: Intrinsics,
    variables: VariableSet,
    cfg: OptimizerConfig,
    use_dynamic_mask: bool,
) -> MaskSet:
    return compute_masks(
        images,
        ScalarField(variables.depth[1], role="depth"),
        PoseSE3.from_params(variables.pose[0]),
        PoseSE3.from_params(variables.pose[1]),
        VectorField(variables.flow[0]),
        VectorField(variables.flow[1]),
        intrinsics,
        cfg.masks,
        use_dynamic_mask=use_dynamic_mask,
    )


def refresh_fundamentals(
    variables: VariableSet, masks: MaskSet, cfg: OptimizerConfig
) -> List[Optional[np.ndarray]]:
    """RANSAC F_est per direction from the current flow; None where estimation fails."""
    out = []
    for i, direction in enumerate((masks.forward, masks.backward)):
        estimate = estimate_from_flow(
            VectorField(variables.flow[i]), [direction.depth_mask], cfg.ransac
        )
        out.append(None if estimate is None else estimate.matrix)
    return out


def optimize(
    init: VariableSet,
    images: Sequence[ImageBuffer],
    intrinsics: Intrinsics,
    schedule: StageSchedule,
    seed: int = 0,
    cfg: Optional[OptimizerConfig] = None,
    fixed_masks: Optional[MaskSet] = None,
) -> OptimizationResult:
    """Run the stages in order with Adam; masks and F_est refresh every ``cfg.mask_refresh`` steps.

    ``fixed_masks`` freezes the masks for the whole run. A non-finite loss
    raises OptimizationAborted carrying the last good variables and the trace.
    """
    cfg = cfg or OptimizerConfig()
    if not init.is_finite():
        raise NumericalError("initial variables are not finite")
    ransac_cfg = cfg.ransac.model_copy(update={"seed": seed})
    cfg = cfg.model_copy(update={"ransac": ransac_cfg})
    inputs = LossInputs(images, intrinsics, cfg.photometric, cfg.num_scales)
    state = _State(init, cfg, seed)
    optimizer = Adam(cfg.beta1, cfg.beta2, cfg.epsilon)
    trace = LossTrace()
    masks = fixed_masks
    f_est: List[Optional[np.ndarray]] = [None, None]
    last_good = init.copy()
    iteration = 0

    for stage in schedule.stages:
        logger.info(
            f"stage {stage.name}: {stage.iterations} iterations, "
            f"active terms {stage.weights.active_terms()}"
        )
        for local in range(stage.iterations):
            fusion = state.fusion(with_jacobians=True)
            current = state.variables(fusion)
            if fixed_masks is None and (local == 0 or iteration % cfg.mask_refresh == 0):
                masks = refresh_masks(images, intrinsics, current, cfg, stage.use_dynamic_mask)
            if stage.weights.g > 0 and (local == 0 or iteration % cfg.mask_refresh == 0):
                f_est = refresh_fundamentals(current, masks, cfg)
            try:
                report = total_loss(
                    inputs,
                    current.to_loss_variables(),
                    stage.weights,
                    masks,
                    f_est=f_est if stage.weights.g > 0 else None,
                    with_gradients=True,
                )
            except NumericalError as exc:
                logger.error(f"aborting at iteration {iteration}: {exc}")
                raise OptimizationAborted(
                    str(exc), term=exc.term, last_good=last_good, trace=trace
                ) from exc
            trace.append(iteration, stage.name, report)
            last_good = current

            grads = _parameter_gradients(report.gradients, current, state, fusion)
            step = stage.step_at(local)
            step_sizes = {
                "depth": step * cfg.step_scale("depth"),
                "omega": step * cfg.step_scale("pose"),
                "tau": step * cfg.step_scale("pose"),
                "flow": step * cfg.step_scale("flow"),
            }
            step_sizes.update({name: step * cfg.attention_step_scale for name in ATTENTION_KEYS})
            optimizer.step(state.params, _trainable(grads, cfg.trainable), step_sizes)
            np.maximum(state.params["depth"], MIN_LOG_DEPTH, out=state.params["depth"])
            if not all(np.all(np.isfinite(p)) for p in state.params.values()):
                raise OptimizationAborted(
                    f"non-finite update at iteration {iteration}", last_good=last_good, trace=trace
                )
            iteration += 1
        logger.info(f"stage {stage.name} finished: total={trace.rows[-1]['total']:.6g}")

    fusion = state.fusion()
    correction = None if fusion is None else fusion.correction
    return OptimizationResult(state.variables(fusion), trace, masks, f_est, correction)


def _parameter_gradients(
    gradients, current: VariableSet, state: _State, fusion: Optional[FusionResult] = None
) -> Dict[str, np.ndarray]:
    """Chain the loss gradients onto the optimizer parameters.

    The fused pose has an identity Jacobian in the base pose, so omega/tau keep
    the pose gradient; attention parameters contract it with their Jacobians.
    """
    grads = {
        "depth": gradients.depth * current.depth,
        "omega": gradients.pose[:, :3],
        "tau": gradients.pose[:, 3:] * state.translation_scale,
        "flow": gradients.flow,
    }
    if fusion is not None:
        for name in DESCRIPTOR_FIELDS + HEAD_FIELDS:
            grads[f"attention_{name}"] = np.tensordot(
                gradients.pose, fusion.jacobians[name], axes=2
            )
    return grads


def _trainable(grads: Dict[str, np.ndarray], trainable: Sequence[str]) -> Dict[str, np.ndarray]:
    groups = {"depth": ("depth",), "pose": ("omega", "tau") + ATTENTION_KEYS, "flow": ("flow",)}
    return {
        name: grads[name]
        for group in GROUPS
        if group in trainable
        for name in groups[group]
        if name in grads
    }
