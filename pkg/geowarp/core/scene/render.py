"""Ray casting of the analytic oracle world."""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np

from geowarp.config.constants import FieldDefaults, SceneDefaults
from geowarp.core.exceptions import SceneSpecError
from geowarp.core.fields.models import (
    ImageBuffer,
    MaskField,
    ScalarField,
    VectorField,
    pixel_grid,
)
from geowarp.core.geometry import Intrinsics, PoseSE3

from .models import PlaneSpec, QuadSpec, SceneFrame, SceneSpec, TextureSpec

logger = logging.getLogger(__name__)

MIN_DEPTH = FieldDefaults.MIN_DEPTH.value
VISIBILITY_TOLERANCE = 1e-6


class ProceduralTexture:
    """0.5 + Σ a·cos(2π d·s/λ + φ) with a = 0.45/n, per channel."""

    def __init__(self, spec: TextureSpec, channels: int = 1):
        rng = np.random.default_rng(spec.seed)
        n = spec.num_waves
        self.amplitude = (0.5 - SceneDefaults.INTENSITY_LOW.value) / n
        angles = rng.uniform(0.0, 2.0 * np.pi, size=(channels, n))
        wavelengths = rng.uniform(
            spec.min_wavelength, 4.0 * spec.min_wavelength, size=(channels, n)
        )
        self.phases = rng.uniform(0.0, 2.0 * np.pi, size=(channels, n))
        # wave vectors, (C, n, 2)
        self.k = np.stack([np.cos(angles), np.sin(angles)], axis=-1) * (
            2.0 * np.pi / wavelengths
        )[..., None]

    def __call__(self, coords: np.ndarray) -> np.ndarray:
        """Intensities (N, C) at surface coordinates (N, 2)."""
        arg = np.einsum("nd,cwd->ncw", coords, self.k) + self.phases[None]
        return 0.5 + self.amplitude * np.cos(arg).sum(axis=-1)


def plane_basis(normal: np.ndarray):
    axis = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = axis - (axis @ normal) * normal
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(normal, e1)


@dataclass
class _Surface:
    normal: np.ndarray
    offset: float
    e1: np.ndarray
    e2: np.ndarray
    origin: np.ndarray
    half_extent: Optional[np.ndarray]
    bounds: Optional[tuple]
    texture: ProceduralTexture
    dynamic: bool


class Hit(NamedTuple):
    depth: np.ndarray  # camera z, (N,)
    surface: np.ndarray  # surface index, (N,)
    points: np.ndarray  # world points, (N, 3)


class SceneModel:
    """Surfaces of a SceneSpec resolved for each frame index 0, 1, 2."""

    def __init__(self, spec: SceneSpec):
        self.spec = spec
        self.intrinsics: Intrinsics = spec.intrinsics
        self.cameras: List[PoseSE3] = spec.camera_poses()
        self._static = [self._plane(p) for p in spec.planes]
        self.quad_index = len(self._static) if spec.quad is not None else None

    def _plane(self, plane: PlaneSpec) -> _Surface:
        normal = np.asarray(plane.normal)
        e1, e2 = plane_basis(normal)
        return _Surface(
            normal,
            plane.offset,
            e1,
            e2,
            np.zeros(3),
            None,
            plane.bounds,
            ProceduralTexture(plane.texture, self.spec.channels),
            False,
        )

    def _quad(self, quad: QuadSpec, frame: int) -> _Surface:
        half_u, half_v = np.asarray(quad.half_u), np.asarray(quad.half_v)
        center = np.asarray(quad.center) + (frame - 1) * np.asarray(quad.motion)
        normal = np.cross(half_u, half_v)
        normal /= np.linalg.norm(normal)
        return _Surface(
            normal,
            float(normal @ center),
            half_u / np.linalg.norm(half_u),
            half_v / np.linalg.norm(half_v),
            center,
            np.array([np.linalg.norm(half_u), np.linalg.norm(half_v)]),
            None,
            ProceduralTexture(quad.texture, self.spec.channels),
            True,
        )

    def surfaces(self, frame: int) -> List[_Surface]:
        if self.spec.quad is None:
            return self._static
        return self._static + [self._quad(self.spec.quad, frame)]

    def cast(self, frame: int, positions: np.ndarray) -> Hit:
        """Nearest surface along the rays through pixel ``positions`` (N, 2)."""
        camera = self.cameras[frame]
        rays = np.column_stack([positions, np.ones(len(positions))]) @ self.intrinsics.inverse.T
        directions = rays @ camera.rotation.T
        origin = camera.translation
        best = np.full(len(positions), np.inf)
        surface_id = np.full(len(positions), -1)
        for j, surface in enumerate(self.surfaces(frame)):
            denom = directions @ surface.normal
            with np.errstate(divide="ignore", invalid="ignore"):
                lam = (surface.offset - surface.normal @ origin) / denom
            ok = np.isfinite(lam) & (lam > MIN_DEPTH)
            points = origin + lam[:, None] * directions
            local = self._local(surface, points)
            if surface.bounds is not None:
                s0, s1, t0, t1 = surface.bounds
                ok &= (local[:, 0] >= s0) & (local[:, 0] <= s1)
                ok &= (local[:, 1] >= t0) & (local[:, 1] <= t1)
            if surface.half_extent is not None:
                ok &= np.all(np.abs(local) <= surface.half_extent, axis=1)
            closer = ok & (lam < best)
            best = np.where(closer, lam, best)
            surface_id = np.where(closer, j, surface_id)
        if np.any(surface_id < 0):
            raise SceneSpecError(
                f"frame {frame}: {int(np.sum(surface_id < 0))} rays hit no surface "
                "in front of the camera"
            )
        return Hit(best, surface_id, origin + best[:, None] * directions)

    @staticmethod
    def _local(surface: _Surface, points: np.ndarray) -> np.ndarray:
        rel = points - surface.origin
        return np.column_stack([rel @ surface.e1, rel @ surface.e2])

    def shade(self, frame: int, hit: Hit) -> np.ndarray:
        out = np.zeros((len(hit.depth), self.spec.channels))
        for j, surface in enumerate(self.surfaces(frame)):
            sel = hit.surface == j
            if np.any(sel):
                out[sel] = surface.texture(self._local(surface, hit.points[sel]))
        return out

    def moved_points(self, hit: Hit, source: int, target: int) -> np.ndarray:
        """World positions at ``target`` of the points hit in ``source``."""
        points = hit.points.copy()
        if self.quad_index is not None:
            on_quad = hit.surface == self.quad_index
            points[on_quad] += (target - source) * np.asarray(self.spec.quad.motion)
        return points

    def project(self, frame: int, points: np.ndarray):
        camera_points = self.cameras[frame].inverse().apply(points)
        z = camera_points[:, 2]
        front = z > MIN_DEPTH
        safe = np.where(front, z, 1.0)
        k = self.intrinsics
        pixels = np.column_stack(
            [k.fx * camera_points[:, 0] / safe + k.cx, k.fy * camera_points[:, 1] / safe + k.cy]
        )
        return pixels, z, front

    def visible(
        self, frame: int, pixels: np.ndarray, z: np.ndarray, candidates: np.ndarray
    ) -> np.ndarray:
        """Depth-ordering test: nothing nearer than ``z`` along the ray at ``pixels``."""
        visible = np.ones(len(pixels), dtype=bool)
        if np.any(candidates):
            hit = self.cast(frame, pixels[candidates])
            visible[candidates] = hit.depth >= z[candidates] * (1.0 - VISIBILITY_TOLERANCE)
        return visible


def _in_bounds(pixels: np.ndarray, height: int, width: int) -> np.ndarray:
    return (
        (pixels[:, 0] >= 0)
        & (pixels[:, 0] <= width - 1)
        & (pixels[:, 1] >= 0)
        & (pixels[:, 1] <= height - 1)
    )


def _correspondence(model: SceneModel, hit: Hit, source: int, target: int):
    spec = model.spec
    points = model.moved_points(hit, source, target)
    pixels, z, front = model.project(target, points)
    valid = front & _in_bounds(pixels, spec.height, spec.width)
    visible = model.visible(target, pixels, z, valid)
    grid = pixel_grid(spec.height, spec.width).reshape(-1, 2)
    flow = np.where(front[:, None], pixels - grid, 0.0)
    shape = (spec.height, spec.width)
    return (
        VectorField(flow.reshape(shape + (2,))),
        MaskField(visible.reshape(shape)),
        MaskField(valid.reshape(shape)),
    )


def render(spec: SceneSpec) -> List[SceneFrame]:
    """Render frames (t−1, t, t+1) with exact depth, flow, occlusion and dynamic masks."""
    model = SceneModel(spec)
    shape = (spec.height, spec.width)
    grid = pixel_grid(*shape).reshape(-1, 2)
    frames = []
    for index in range(3):
        hit = model.cast(index, grid)
        image = np.clip(model.shade(index, hit), 0.0, 1.0).reshape(shape + (spec.channels,))
        dynamic = np.ones(len(grid), dtype=bool)
        if model.quad_index is not None:
            dynamic = hit.surface != model.quad_index
        extras = {}
        for key, target in (("forward", index + 1), ("backward", index - 1)):
            if 0 <= target <= 2:
                flow, occlusion, valid = _correspondence(model, hit, index, target)
                extras[f"flow_{key}"] = flow
                extras[f"occlusion_{key}"] = occlusion
                extras[f"valid_{key}"] = valid
                extras[f"pose_{key}"] = spec.relative_pose(index, target)
        frames.append(
            SceneFrame(
                index=index,
                image=ImageBuffer(image),
                depth=ScalarField(hit.depth.reshape(shape), role="depth"),
                dynamic=MaskField(dynamic.reshape(shape)),
                **extras,
            )
        )
        logger.debug(
            f"rendered frame {index}: depth range [{hit.depth.min():.3f}, {hit.depth.max():.3f}]"
        )
    return frames


def supersampled_occlusion(
    spec: SceneSpec, factor: int = 4, source: int = 1, target: int = 2
) -> np.ndarray:
    """Fraction of ``factor``×``factor`` sub-pixel samples of each pixel that are occluded.

    Out-of-view samples do not count as occluded.
    """
    model = SceneModel(spec)
    offsets = (np.arange(factor) + 0.5) / factor - 0.5
    du, dv = np.meshgrid(offsets, offsets)
    grid = pixel_grid(spec.height, spec.width).reshape(-1, 1, 2)
    positions = (grid + np.stack([du.ravel(), dv.ravel()], axis=-1)[None]).reshape(-1, 2)
    hit = model.cast(source, positions)
    points = model.moved_points(hit, source, target)
    pixels, z, front = model.project(target, points)
    valid = front & _in_bounds(pixels, spec.height, spec.width)
    occluded = ~model.visible(target, pixels, z, valid)
    return occluded.reshape(spec.height, spec.width, factor * factor).mean(axis=-1)
