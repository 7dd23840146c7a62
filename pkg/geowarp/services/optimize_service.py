import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from geowarp.config.config import OptimizeOptions
from geowarp.core.evaluation import FlowGroundTruth, TrajectoryFile, depth_metrics, flow_metrics
from geowarp.core.evaluation.io import write_depth_png, write_flow_png, write_poses
from geowarp.core.exceptions import OptimizationAborted
from geowarp.core.fields.io import normalized_for_display, write_gwf, write_pnm
from geowarp.core.fields.models import MaskField, ScalarField, VectorField
from geowarp.core.geometry import PoseSE3
from geowarp.core.optimization import (
    OptimizerConfig,
    StageSchedule,
    VariableSet,
    apply_variant,
    optimize,
    select_stages,
    stage_schedule_default,
)
from geowarp.core.scene import ground_truth_arrays, load_scene, perturb

from .synth_service import DEPTH_DIR, KITTI_NAME, POSES_TXT

logger = logging.getLogger(__name__)

TRACE_FILE = "trace.csv"
SCHEDULE_FILE = "schedule.json"
FIELDS_DIR = "fields"
PRED_DIR = "pred"
FLOW_PRED_DIR = "flow"


def pose_errors(estimate: np.ndarray, truth: np.ndarray) -> Dict[str, float]:
    """Rotation error and translation-direction error in degrees."""
    est, gt = PoseSE3.from_params(estimate), PoseSE3.from_params(truth)
    rotation = gt.inverse().compose(est).rotation_angle
    norms = np.linalg.norm(est.translation) * np.linalg.norm(gt.translation)
    cosine = float(est.translation @ gt.translation / norms) if norms > 0 else 1.0
    return {
        "rotation_error_deg": float(np.degrees(rotation)),
        "translation_direction_error_deg": float(np.degrees(np.arccos(np.clip(cosine, -1, 1)))),
    }


def build_schedule(options: OptimizeOptions) -> Tuple[StageSchedule, OptimizerConfig]:
    """Selected stages and optimizer settings with the ablation variant applied."""
    schedule = stage_schedule_default(
        options.iterations, options.step_size, options.final_step_size
    )
    cfg = OptimizerConfig(
        num_scales=options.scales,
        trainable=tuple(options.trainable),
        masks=options.masks,
        photometric=options.photometric,
    )
    return apply_variant(select_stages(schedule, options.stages), cfg, options.variant)


def camera_trajectory(pose: np.ndarray) -> TrajectoryFile:
    """Camera-to-world poses of (t−1, t, t+1) with frame t as the world."""
    forward, backward = PoseSE3.from_params(pose[0]), PoseSE3.from_params(pose[1])
    return TrajectoryFile([backward.inverse(), PoseSE3.identity(), forward.inverse()])


def save_variables(variables: VariableSet, outdir: Path) -> List[Path]:
    fields_dir = outdir / FIELDS_DIR
    fields_dir.mkdir(parents=True, exist_ok=True)
    written = []
    depth = variables.depth
    for k in range(3):
        path = fields_dir / f"depth_{k}.gwf"
        write_gwf(path, ScalarField(depth[k], role="depth"))
        written.append(path)
    for i, name in enumerate(("flow_forward", "flow_backward")):
        path = fields_dir / f"{name}.gwf"
        write_gwf(path, VectorField(variables.flow[i]))
        written.append(path)
    preview = normalized_for_display(ScalarField(depth[1]))
    write_pnm(fields_dir / "depth_t.pgm", preview, maxval=65535)
    written.append(fields_dir / "depth_t.pgm")
    poses = {"forward": variables.pose[0].tolist(), "backward": variables.pose[1].tolist()}
    (fields_dir / "poses.json").write_text(json.dumps(poses, indent=2))
    written.append(fields_dir / "poses.json")

    # devkit-format predictions for the eval commands
    pred = outdir / PRED_DIR
    for sub in (FLOW_PRED_DIR, DEPTH_DIR):
        (pred / sub).mkdir(parents=True, exist_ok=True)
    flow = VectorField(variables.flow[0])
    write_flow_png(
        pred / FLOW_PRED_DIR / KITTI_NAME, FlowGroundTruth(flow, MaskField.ones(*flow.shape))
    )
    write_depth_png(pred / DEPTH_DIR / KITTI_NAME, ScalarField(depth[1], role="depth"))
    write_poses(pred / POSES_TXT, camera_trajectory(variables.pose))
    written += [pred / FLOW_PRED_DIR / KITTI_NAME, pred / DEPTH_DIR / KITTI_NAME, pred / POSES_TXT]
    return written


def optimize_service(
    scene_dir: Union[str, Path],
    outdir: Union[str, Path],
    options: OptimizeOptions,
    seed: int = 0,
) -> Dict[str, Any]:
    """Optimize a perturbed ground-truth start on a synthesized scene and score the result."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    spec, frames = load_scene(scene_dir)
    truth = ground_truth_arrays(frames)
    start = perturb(frames, options.noise, seed=seed)
    init = VariableSet.from_depth(start.depth, start.pose, start.flow)
    schedule, cfg = build_schedule(options)
    (outdir / SCHEDULE_FILE).write_text(
        json.dumps(
            [
                {
                    "name": stage.name,
                    "iterations": stage.iterations,
                    "weights": stage.weights.model_dump(),
                    "use_dynamic_mask": stage.use_dynamic_mask,
                }
                for stage in schedule.stages
            ],
            indent=2,
        )
    )

    images = [frame.image for frame in frames]
    try:
        result = optimize(init, images, spec.intrinsics, schedule, seed=seed, cfg=cfg)
    except OptimizationAborted as exc:
        logger.error(f"optimization aborted; saving the last good state to {outdir}")
        if exc.trace is not None:
            exc.trace.to_csv(outdir / TRACE_FILE)
        if exc.last_good is not None:
            save_variables(exc.last_good, outdir)
        raise

    result.trace.to_csv(outdir / TRACE_FILE)
    written = [outdir / TRACE_FILE, outdir / SCHEDULE_FILE]
    written += save_variables(result.variables, outdir)

    final = result.variables
    centre = frames[1]
    flow_scores = {}
    for i, name in enumerate(("forward", "backward")):
        valid = getattr(centre, f"valid_{name}")
        gt = FlowGroundTruth(VectorField(truth.flow[i]), valid)
        flow_scores[name] = flow_metrics(VectorField(final.flow[i]), gt).epe["all"]
    depth_scores = depth_metrics(
        ScalarField(final.depth[1], role="depth"), centre.depth, median_scaling=True
    )
    last = result.trace.rows[-1]
    logger.info(f"optimized {schedule.total_iterations} iterations; final total {last['total']:.6g}")
    return {
        "scene_dir": str(scene_dir),
        "seed": seed,
        "stages": schedule.names,
        "variant": options.variant,
        "attention": cfg.attention,
        "iterations": schedule.total_iterations,
        "final_terms": {k: v for k, v in last.items() if k not in ("iteration", "stage")},
        "initial_pose_errors": [pose_errors(start.pose[i], truth.pose[i]) for i in range(2)],
        "pose_errors": [pose_errors(final.pose[i], truth.pose[i]) for i in range(2)],
        "depth": depth_scores.to_dict(),
        "flow_epe": flow_scores,
        "pose_correction": None if result.correction is None else result.correction.tolist(),
        "outputs": sorted(str(p.relative_to(outdir)) for p in written),
    }
