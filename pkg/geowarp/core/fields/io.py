"""Binary GWF1 container and PGM/PPM export for dense fields."""

import logging
from pathlib import Path
from typing import Union

import cv2
import numpy as np

from geowarp.config.constants import FieldDefaults
from geowarp.core.exceptions import ParseError

from .models import ImageBuffer, MaskField, ScalarField, VectorField

logger = logging.getLogger(__name__)

MAGIC = FieldDefaults.GWF_MAGIC.value
HEADER_SIZE = len(MAGIC) + 12

AnyField = Union[ImageBuffer, ScalarField, VectorField, MaskField]


def _as_hwc(field) -> np.ndarray:
    data = np.asarray(field.data if hasattr(field, "data") else field)
    return data[..., None] if data.ndim == 2 else data


def encode_gwf(field) -> bytes:
    data = _as_hwc(field)
    header = np.array(data.shape, dtype="<u4").tobytes()
    return MAGIC + header + data.astype("<f4").tobytes()


def decode_gwf(payload: bytes) -> np.ndarray:
    """Decode to an (H, W, C) float64 array."""
    if len(payload) < HEADER_SIZE or payload[: len(MAGIC)] != MAGIC:
        raise ParseError("not a GWF1 container (bad magic)")
    height, width, channels = np.frombuffer(
        payload, dtype="<u4", count=3, offset=len(MAGIC)
    )
    expected = HEADER_SIZE + 4 * int(height) * int(width) * int(channels)
    if len(payload) != expected:
        raise ParseError(
            f"GWF1 size mismatch at byte {HEADER_SIZE}: expected {expected} bytes, got {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f4", offset=HEADER_SIZE)
    return data.reshape(int(height), int(width), int(channels)).astype(np.float64)


def write_gwf(path: Union[str, Path], field) -> None:
    Path(path).write_bytes(encode_gwf(field))


def read_gwf(path: Union[str, Path]) -> np.ndarray:
    return decode_gwf(Path(path).read_bytes())


def encode_pnm(field, maxval: int = 255) -> bytes:
    """Binary PGM (1 channel) or PPM (3 channels) of values in [0, 1]."""
    data = _as_hwc(field).astype(np.float64)
    if isinstance(field, MaskField):
        data = data.astype(np.float64)
    dtype = np.uint16 if maxval > 255 else np.uint8
    scaled = np.rint(np.clip(data, 0.0, 1.0) * maxval).astype(dtype)
    if scaled.shape[2] == 3:
        ok, buf = cv2.imencode(".ppm", scaled[..., ::-1])
    else:
        ok, buf = cv2.imencode(".pgm", scaled[..., 0])
    if not ok:
        raise ParseError("PNM encoding failed")
    return buf.tobytes()


def decode_pnm(payload: bytes) -> np.ndarray:
    """Decode a PGM/PPM into (H, W, C) values in [0, 1]."""
    image = cv2.imdecode(np.frombuffer(payload, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if image is None:
        raise ParseError("not a decodable PGM/PPM")
    maxval = 65535.0 if image.dtype == np.uint16 else 255.0
    image = image.astype(np.float64) / maxval
    if image.ndim == 3:
        image = image[..., ::-1]
    else:
        image = image[..., None]
    return image


def write_pnm(path: Union[str, Path], field, maxval: int = 255) -> None:
    Path(path).write_bytes(encode_pnm(field, maxval=maxval))


def normalized_for_display(field: ScalarField) -> np.ndarray:
    """Min-max scale a scalar field into [0, 1] for PGM inspection."""
    data = np.asarray(field.data, dtype=np.float64)
    span = data.max() - data.min()
    if span == 0:
        return np.zeros_like(data)
    return (data - data.min()) / span


def read_pnm(path: Union[str, Path]) -> np.ndarray:
    return decode_pnm(Path(path).read_bytes())
