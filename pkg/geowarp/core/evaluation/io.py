"""KITTI devkit artifacts: calib/pose text files and 16-bit flow/depth PNGs."""

import logging
from pathlib import Path
from typing import Iterator, List, Tuple, Union

import cv2
import numpy as np

from geowarp.config.constants import MetricDefaults
from geowarp.core.exceptions import FieldError, ParseError
from geowarp.core.fields.models import MaskField, ScalarField, VectorField
from geowarp.core.geometry import PoseSE3, nearest_rotation, orthonormality_error
from geowarp.core.geometry.models import ORTHONORMAL_TOLERANCE

from .models import CALIB_VALUES, POSE_VALUES, CalibRecord, FlowGroundTruth, TrajectoryFile

logger = logging.getLogger(__name__)

FLOW_SCALE = MetricDefaults.FLOW_SCALE.value
FLOW_OFFSET = MetricDefaults.FLOW_OFFSET.value
DEPTH_SCALE = MetricDefaults.DEPTH_PNG_SCALE.value
UINT16_MAX = 65535
# Rows further than this from SO(3) are rejected rather than repaired.
MAX_REPAIRABLE_ERROR = 1e-2

PathLike = Union[str, Path]


def _content_lines(text: str) -> Iterator[Tuple[int, str]]:
    for number, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            yield number, line


def _parse_floats(tokens: List[str], expected: int, line: int, label: str) -> np.ndarray:
    if len(tokens) != expected:
        raise ParseError(f"{label}: expected {expected} values, got {len(tokens)}", line=line)
    values = []
    for token in tokens:
        try:
            values.append(float(token))
        except ValueError:
            raise ParseError(f"{label}: non-numeric token {token!r}", line=line)
    array = np.array(values, dtype=np.float64)
    if not np.all(np.isfinite(array)):
        raise ParseError(f"{label}: non-finite value", line=line)
    return array


def _format_row(values: np.ndarray) -> str:
    return " ".join(f"{v:.17g}" for v in np.asarray(values, dtype=np.float64).reshape(-1))


def parse_calib(text: str) -> CalibRecord:
    """Parse ``key: v1 ... v12`` rows (P0..P3, Tr, ...)."""
    entries = {}
    for number, line in _content_lines(text):
        key, sep, rest = line.partition(":")
        key = key.strip()
        if not sep or not key or len(key.split()) != 1:
            raise ParseError(f"expected 'key: values', got {line.strip()!r}", line=number)
        if key in entries:
            raise ParseError(f"duplicate calibration key {key!r}", line=number)
        entries[key] = _parse_floats(rest.split(), CALIB_VALUES, number, key)
    return CalibRecord(entries)


def format_calib(record: CalibRecord) -> str:
    return "".join(f"{key}: {_format_row(matrix)}\n" for key, matrix in record.entries.items())


def parse_poses(text: str, reorthogonalize: bool = True) -> TrajectoryFile:
    """Parse one row-major 3x4 camera-to-world matrix per line.

    Rotations off SO(3) by more than round-off are projected back and flagged
    when ``reorthogonalize`` is set, and rejected otherwise.
    """
    poses, flags = [], []
    for number, line in _content_lines(text):
        matrix = _parse_floats(line.split(), POSE_VALUES, number, "pose").reshape(3, 4)
        error = orthonormality_error(matrix[:, :3])
        repaired = error > ORTHONORMAL_TOLERANCE
        if repaired and (not reorthogonalize or error > MAX_REPAIRABLE_ERROR):
            raise ParseError(f"rotation is not orthonormal (error {error:.3g})", line=number)
        if repaired:
            matrix = np.hstack([nearest_rotation(matrix[:, :3]), matrix[:, 3:]])
        poses.append(PoseSE3.from_matrix34(matrix))
        flags.append(bool(repaired))
    if any(flags):
        logger.warning(f"re-orthogonalized {sum(flags)} of {len(flags)} pose rows")
    return TrajectoryFile(poses, flags)


def format_poses(trajectory: TrajectoryFile) -> str:
    return "".join(_format_row(pose.as_matrix34()) + "\n" for pose in trajectory.poses)


def read_calib(path: PathLike) -> CalibRecord:
    return parse_calib(Path(path).read_text())


def read_poses(path: PathLike, reorthogonalize: bool = True) -> TrajectoryFile:
    return parse_poses(Path(path).read_text(), reorthogonalize=reorthogonalize)


def write_poses(path: PathLike, trajectory: TrajectoryFile) -> None:
    Path(path).write_text(format_poses(trajectory))


def _decode_png16(payload: bytes, channels: int, what: str) -> np.ndarray:
    image = cv2.imdecode(np.frombuffer(payload, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if image is None:
        raise ParseError(f"{what}: not a decodable PNG")
    if image.dtype != np.uint16:
        raise ParseError(f"{what}: expected 16-bit PNG, got {image.dtype}")
    found = 1 if image.ndim == 2 else image.shape[2]
    if found != channels:
        raise ParseError(f"{what}: expected {channels} channel(s), got {found}")
    return image


def _encode_png(image: np.ndarray, what: str) -> bytes:
    ok, buf = cv2.imencode(".png", np.ascontiguousarray(image))
    if not ok:
        raise ParseError(f"{what}: PNG encoding failed")
    return buf.tobytes()


def decode_flow_png(payload: bytes) -> FlowGroundTruth:
    """u = (R − 2¹⁵)/64, v = (G − 2¹⁵)/64, valid where B > 0."""
    bgr = _decode_png16(payload, 3, "flow").astype(np.float64)
    flow = (bgr[..., [2, 1]] - FLOW_OFFSET) / FLOW_SCALE
    return FlowGroundTruth(VectorField(flow), MaskField(bgr[..., 0] > 0))


def encode_flow_png(gt: FlowGroundTruth) -> bytes:
    """Inverse of decode_flow_png; invalid pixels are written as zero flow.

    Valid values are rounded to the 1/64 grid and must fit the 16-bit range.
    """
    valid = gt.valid.as_bool()
    raw = np.rint(gt.flow.data * FLOW_SCALE + FLOW_OFFSET)
    raw[~valid] = FLOW_OFFSET
    if raw.min() < 0 or raw.max() > UINT16_MAX:
        limit = (UINT16_MAX - FLOW_OFFSET) / FLOW_SCALE
        raise FieldError(f"flow outside the encodable range [-512, {limit}]")
    bgr = np.stack([valid.astype(np.float64), raw[..., 1], raw[..., 0]], axis=-1)
    return _encode_png(bgr.astype(np.uint16), "flow")


def decode_depth_png(payload: bytes) -> ScalarField:
    """Depth in metres = value / 256; 0 marks a missing measurement."""
    raw = _decode_png16(payload, 1, "depth").astype(np.float64)
    return ScalarField(raw / DEPTH_SCALE, role="measurement")


def encode_depth_png(depth: ScalarField) -> bytes:
    data = np.asarray(depth.data, dtype=np.float64)
    raw = np.rint(np.where(data > 0, data, 0.0) * DEPTH_SCALE)
    if raw.max(initial=0) > UINT16_MAX:
        raise FieldError(f"depth above the encodable maximum {UINT16_MAX / DEPTH_SCALE:.3f} m")
    return _encode_png(raw.astype(np.uint16), "depth")


def encode_mask_png(mask: MaskField) -> bytes:
    """8-bit PNG, 255 where the mask keeps a pixel."""
    return _encode_png(mask.data.astype(np.uint8) * 255, "mask")


def decode_mask_png(payload: bytes) -> MaskField:
    """Any 8/16-bit PNG; nonzero pixels (in any channel) are kept."""
    image = cv2.imdecode(np.frombuffer(payload, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if image is None:
        raise ParseError("mask: not a decodable PNG")
    if image.ndim == 3:
        image = image.max(axis=2)
    return MaskField(image > 0)


def read_flow_png(path: PathLike) -> FlowGroundTruth:
    return decode_flow_png(Path(path).read_bytes())


def write_flow_png(path: PathLike, gt: FlowGroundTruth) -> None:
    Path(path).write_bytes(encode_flow_png(gt))


def read_depth_png(path: PathLike) -> ScalarField:
    return decode_depth_png(Path(path).read_bytes())


def write_depth_png(path: PathLike, depth: ScalarField) -> None:
    Path(path).write_bytes(encode_depth_png(depth))


def read_mask_png(path: PathLike) -> MaskField:
    return decode_mask_png(Path(path).read_bytes())


def write_mask_png(path: PathLike, mask: MaskField) -> None:
    Path(path).write_bytes(encode_mask_png(mask))


def read_file_list(path: PathLike) -> List[str]:
    """Non-empty lines of a split file; ``#`` starts a comment."""
    names = []
    for line in Path(path).read_text().splitlines():
        entry = line.split("#", 1)[0].strip()
        if entry:
            names.append(entry)
    return names
