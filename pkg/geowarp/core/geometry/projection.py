"""Back-projection, reprojection, rigid flow and projected depth."""

import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np

from geowarp.config.constants import FieldDefaults
from geowarp.core.exceptions import GeometryError
from geowarp.core.fields.models import MaskField, ScalarField, VectorField, pixel_grid

from .models import Intrinsics, PoseSE3
from .so3 import rotation_derivatives

logger = logging.getLogger(__name__)

MIN_DEPTH = FieldDefaults.MIN_DEPTH.value


class PointReprojection(NamedTuple):
    pixel: np.ndarray
    depth: float
    behind_camera: bool


class FieldReprojection(NamedTuple):
    """Dense reprojection of a depth map through a pose.

    Jacobians are populated only when requested:
    d_coords_d_depth (H, W, 2), d_z_d_depth (H, W),
    d_coords_d_pose (H, W, 2, 6), d_z_d_pose (H, W, 6).
    Pose parameters are ordered (ω, t).
    """

    coords: np.ndarray
    depth: np.ndarray
    front: np.ndarray
    in_bounds: np.ndarray
    d_coords_d_depth: Optional[np.ndarray] = None
    d_z_d_depth: Optional[np.ndarray] = None
    d_coords_d_pose: Optional[np.ndarray] = None
    d_z_d_pose: Optional[np.ndarray] = None

    @property
    def valid(self) -> np.ndarray:
        return self.front & self.in_bounds


def _check_depth(depth: float) -> None:
    if not np.isfinite(depth) or depth < MIN_DEPTH:
        raise GeometryError(f"depth must be >= {MIN_DEPTH}, got {depth}")


def backproject(pixel, depth: float, intrinsics: Intrinsics) -> np.ndarray:
    """P = depth · K⁻¹ (u, v, 1)ᵀ."""
    _check_depth(depth)
    u, v = float(pixel[0]), float(pixel[1])
    return depth * (intrinsics.inverse @ np.array([u, v, 1.0]))


def project(point: np.ndarray, intrinsics: Intrinsics) -> np.ndarray:
    x, y, z = point
    return np.array(
        [intrinsics.fx * x / z + intrinsics.cx, intrinsics.fy * y / z + intrinsics.cy]
    )


def reproject(
    pixel, depth: float, intrinsics: Intrinsics, pose: PoseSE3
) -> PointReprojection:
    """Map a pixel with depth into the frame reached by ``pose``."""
    point = pose.apply(backproject(pixel, depth, intrinsics))
    z = float(point[2])
    if z <= MIN_DEPTH:
        return PointReprojection(np.array([np.nan, np.nan]), z, True)
    return PointReprojection(project(point, intrinsics), z, False)


def reproject_field(
    depth: np.ndarray,
    intrinsics: Intrinsics,
    pose: PoseSE3,
    with_jacobians: bool = False,
    omega: Optional[np.ndarray] = None,
) -> FieldReprojection:
    """Reproject every pixel of an (H, W) depth array.

    Behind-camera pixels get finite placeholder coordinates and front=False.
    ``omega`` overrides the axis-angle used for the rotation derivatives.
    """
    depth = np.asarray(depth, dtype=np.float64)
    height, width = depth.shape
    grid = pixel_grid(height, width)
    rays = np.concatenate([grid, np.ones((height, width, 1))], axis=-1) @ intrinsics.inverse.T
    points = depth[..., None] * rays
    moved = points @ pose.rotation.T + pose.translation
    x, y, z = moved[..., 0], moved[..., 1], moved[..., 2]
    front = z > MIN_DEPTH
    z_safe = np.where(front, z, 1.0)
    fx, fy = intrinsics.fx, intrinsics.fy
    u = fx * x / z_safe + intrinsics.cx
    v = fy * y / z_safe + intrinsics.cy
    u = np.where(front, u, -1.0)
    v = np.where(front, v, -1.0)
    coords = np.stack([u, v], axis=-1)
    in_bounds = (u >= 0) & (u <= width - 1) & (v >= 0) & (v <= height - 1)
    if not with_jacobians:
        return FieldReprojection(coords, z, front, in_bounds)

    # ∂(u', v')/∂X, (H, W, 2, 3)
    d_proj = np.zeros((height, width, 2, 3))
    d_proj[..., 0, 0] = fx / z_safe
    d_proj[..., 0, 2] = -fx * x / z_safe**2
    d_proj[..., 1, 1] = fy / z_safe
    d_proj[..., 1, 2] = -fy * y / z_safe**2
    d_proj[~front] = 0.0

    d_x_d_depth = rays @ pose.rotation.T
    d_coords_d_depth = np.einsum("hwij,hwj->hwi", d_proj, d_x_d_depth)
    d_z_d_depth = d_x_d_depth[..., 2]

    if omega is None:
        omega = pose.to_params()[:3]
    d_rot = rotation_derivatives(omega)
    d_x_d_pose = np.zeros((height, width, 3, 6))
    for k in range(3):
        d_x_d_pose[..., :, k] = points @ d_rot[k].T
    d_x_d_pose[..., :, 3:] = np.eye(3)
    d_coords_d_pose = np.einsum("hwij,hwjk->hwik", d_proj, d_x_d_pose)
    d_z_d_pose = d_x_d_pose[..., 2, :]
    return FieldReprojection(
        coords,
        z,
        front,
        in_bounds,
        d_coords_d_depth,
        d_z_d_depth,
        d_coords_d_pose,
        d_z_d_pose,
    )


def rigid_flow(
    depth: ScalarField, intrinsics: Intrinsics, pose: PoseSE3
) -> Tuple[VectorField, MaskField]:
    """Static flow F_rig = p' − p and its validity mask M_v."""
    result = reproject_field(depth.data, intrinsics, pose)
    grid = pixel_grid(depth.height, depth.width)
    flow = np.where(result.front[..., None], result.coords - grid, 0.0)
    return VectorField(flow), MaskField(result.valid)


def projected_depth(
    depth: ScalarField, intrinsics: Intrinsics, pose: PoseSE3
) -> Tuple[ScalarField, MaskField]:
    """z after motion, indexed at the source pixel; behind-camera pixels masked."""
    result = reproject_field(depth.data, intrinsics, pose)
    if not result.front.all():
        logger.debug(f"{int((~result.front).sum())} pixels behind camera")
    values = np.where(result.front, result.depth, MIN_DEPTH)
    return ScalarField(values, role="depth"), MaskField(result.front)
