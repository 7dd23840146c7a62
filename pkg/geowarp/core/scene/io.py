"""Scene directories: the JSON spec plus one GWF1 file per frame quantity."""

import json
import logging
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from geowarp.core.exceptions import SceneSpecError
from geowarp.core.fields.io import normalized_for_display, read_gwf, write_gwf, write_pnm
from geowarp.core.fields.models import ImageBuffer, MaskField, ScalarField, VectorField
from geowarp.core.geometry import PoseSE3

from .models import SceneFrame, SceneSpec

logger = logging.getLogger(__name__)

SPEC_FILE = "scene.json"
POSES_FILE = "poses.json"
OPTIONAL_FIELDS = {
    "flow_forward": VectorField,
    "flow_backward": VectorField,
    "occlusion_forward": MaskField,
    "occlusion_backward": MaskField,
    "valid_forward": MaskField,
    "valid_backward": MaskField,
}


def frame_dir(outdir: Union[str, Path], index: int) -> Path:
    return Path(outdir) / f"frame_{index}"


def save_scene(
    spec: SceneSpec, frames: Sequence[SceneFrame], outdir: Union[str, Path]
) -> List[Path]:
    """Write the scene spec and every frame quantity; returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = [outdir / SPEC_FILE]
    written[0].write_text(spec.model_dump_json(indent=2))
    poses = {}
    for frame in frames:
        directory = frame_dir(outdir, frame.index)
        directory.mkdir(exist_ok=True)
        arrays = {"image": frame.image, "depth": frame.depth, "dynamic": frame.dynamic}
        arrays.update(
            {
                name: getattr(frame, name)
                for name in OPTIONAL_FIELDS
                if getattr(frame, name) is not None
            }
        )
        for name, field in arrays.items():
            path = directory / f"{name}.gwf"
            write_gwf(path, field)
            written.append(path)
        preview = directory / ("image.ppm" if frame.image.channels == 3 else "image.pgm")
        write_pnm(preview, frame.image)
        write_pnm(directory / "depth.pgm", normalized_for_display(frame.depth), maxval=65535)
        written += [preview, directory / "depth.pgm"]
        poses[str(frame.index)] = {
            key: getattr(frame, f"pose_{key}").to_params().tolist()
            for key in ("forward", "backward")
            if getattr(frame, f"pose_{key}") is not None
        }
    (outdir / POSES_FILE).write_text(json.dumps(poses, indent=2))
    written.append(outdir / POSES_FILE)
    logger.info(f"saved {len(frames)} frames to {outdir}")
    return written


def load_scene(outdir: Union[str, Path]) -> Tuple[SceneSpec, List[SceneFrame]]:
    outdir = Path(outdir)
    spec_path = outdir / SPEC_FILE
    if not spec_path.exists():
        raise SceneSpecError(f"missing scene spec: {spec_path}")
    spec = SceneSpec.model_validate_json(spec_path.read_text())
    poses = json.loads((outdir / POSES_FILE).read_text())
    frames = []
    for index in range(3):
        directory = frame_dir(outdir, index)
        if not directory.exists():
            raise SceneSpecError(f"missing frame directory: {directory}")
        extras = {}
        for name, kind in OPTIONAL_FIELDS.items():
            path = directory / f"{name}.gwf"
            if path.exists():
                data = read_gwf(path)
                extras[name] = kind(data if kind is VectorField else data[..., 0] > 0.5)
        for key, params in poses.get(str(index), {}).items():
            extras[f"pose_{key}"] = PoseSE3.from_params(np.asarray(params))
        frames.append(
            SceneFrame(
                index=index,
                image=ImageBuffer(np.clip(read_gwf(directory / "image.gwf"), 0.0, 1.0)),
                depth=ScalarField(read_gwf(directory / "depth.gwf")[..., 0], role="depth"),
                dynamic=MaskField(read_gwf(directory / "dynamic.gwf")[..., 0] > 0.5),
                **extras,
            )
        )
    return spec, frames
