import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np

from geowarp.core.evaluation import FlowGroundTruth, TrajectoryFile
from geowarp.core.evaluation.io import (
    write_depth_png,
    write_flow_png,
    write_mask_png,
    write_poses,
)
from geowarp.core.exceptions import SceneSpecError
from geowarp.core.fields.models import MaskField
from geowarp.core.scene import PRESETS, SceneFrame, SceneSpec, render, save_scene

logger = logging.getLogger(__name__)

KITTI_DIR = "kitti"
KITTI_NAME = "000000_10.png"
FLOW_OCC_DIR = "flow_occ"
FLOW_NOC_DIR = "flow_noc"
OBJ_MAP_DIR = "obj_map"
DEPTH_DIR = "depth"
POSES_TXT = "poses.txt"


def load_scene_spec(scene: str) -> SceneSpec:
    """A preset name or the path of a scene spec JSON."""
    if scene in PRESETS:
        return PRESETS[scene]()
    path = Path(scene)
    if not path.is_file():
        raise SceneSpecError(
            f"scene {scene!r} is neither a preset ({', '.join(PRESETS)}) nor an existing file"
        )
    return SceneSpec.model_validate_json(path.read_text())


def write_kitti_ground_truth(
    spec: SceneSpec, frames: Sequence[SceneFrame], outdir: Union[str, Path]
) -> List[Path]:
    """Frame-t ground truth in the devkit layout, so the eval commands can score predictions."""
    root = Path(outdir)
    centre = frames[1]
    valid = centre.valid_forward.as_bool()
    noc = valid & centre.occlusion_forward.as_bool()
    occ_gt = FlowGroundTruth(centre.flow_forward, MaskField(valid))
    noc_gt = FlowGroundTruth(centre.flow_forward, MaskField(noc))

    written = []
    for sub, gt in ((FLOW_OCC_DIR, occ_gt), (FLOW_NOC_DIR, noc_gt)):
        (root / sub).mkdir(parents=True, exist_ok=True)
        write_flow_png(root / sub / KITTI_NAME, gt)
        written.append(root / sub / KITTI_NAME)

    (root / OBJ_MAP_DIR).mkdir(parents=True, exist_ok=True)
    write_mask_png(root / OBJ_MAP_DIR / KITTI_NAME, MaskField(~centre.dynamic.as_bool()))
    written.append(root / OBJ_MAP_DIR / KITTI_NAME)

    (root / DEPTH_DIR).mkdir(parents=True, exist_ok=True)
    write_depth_png(root / DEPTH_DIR / KITTI_NAME, centre.depth)
    written.append(root / DEPTH_DIR / KITTI_NAME)

    write_poses(root / POSES_TXT, TrajectoryFile(spec.camera_poses()))
    written.append(root / POSES_TXT)
    return written


def synth_service(scene: str, outdir: Union[str, Path], seed: int = 0) -> Dict[str, Any]:
    """Render a scene (texture seeds shifted by ``seed``) and dump frames plus ground truth."""
    outdir = Path(outdir)
    spec = load_scene_spec(scene).reseeded(seed)
    frames = render(spec)
    written = save_scene(spec, frames, outdir)
    written += write_kitti_ground_truth(spec, frames, outdir / KITTI_DIR)
    centre = frames[1]
    logger.info(f"synthesized scene {scene!r} ({spec.height}x{spec.width}) into {outdir}")
    return {
        "scene": scene,
        "seed": seed,
        "height": spec.height,
        "width": spec.width,
        "channels": spec.channels,
        "frames": len(frames),
        "depth_range": [float(centre.depth.data.min()), float(centre.depth.data.max())],
        "dynamic_pixels": int(np.sum(centre.dynamic.data == 0)),
        "occluded_pixels_forward": int(np.sum(centre.occlusion_forward.data == 0)),
        "outputs": sorted(str(p.relative_to(outdir)) for p in written),
    }
