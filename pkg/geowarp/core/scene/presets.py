"""Ready-made oracle scenes.

Texture wavelengths are chosen so that the shortest period projects to at
least 8 px at the nearest depth of each surface.
"""

from geowarp.config.constants import GradientCheckDefaults, SceneDefaults

from .models import CameraSpec, PlaneSpec, QuadSpec, SceneSpec, TextureSpec


def _lateral_cameras(baseline: float, forward: float = 0.0, yaw: float = 0.0):
    return [
        CameraSpec(rotation=(0.0, -yaw, 0.0), position=(-baseline, 0.0, -forward)),
        CameraSpec(),
        CameraSpec(rotation=(0.0, yaw, 0.0), position=(baseline, 0.0, forward)),
    ]


def standard_oracle_scene(channels: int = 1) -> SceneSpec:
    """64×96: textured back wall, slanted near plane on the left, moving quad on the right."""
    return SceneSpec(
        height=SceneDefaults.HEIGHT.value,
        width=SceneDefaults.WIDTH.value,
        fx=SceneDefaults.FOCAL.value,
        fy=SceneDefaults.FOCAL.value,
        channels=channels,
        planes=[
            PlaneSpec(
                normal=(0.0, 0.0, 1.0),
                offset=12.0,
                texture=TextureSpec(seed=1, min_wavelength=1.2),
            ),
            PlaneSpec(
                normal=(0.25, 0.0, 1.0),
                offset=5.82,
                texture=TextureSpec(seed=2, min_wavelength=0.6),
                bounds=(-20.0, -1.5, -50.0, 50.0),
            ),
        ],
        quad=QuadSpec(
            center=(0.9, 0.3, 4.5),
            half_u=(0.6, 0.0, 0.0),
            half_v=(0.0, 0.5, 0.0),
            motion=(0.25, 0.0, 0.0),
            texture=TextureSpec(seed=3, min_wavelength=0.45),
        ),
        cameras=_lateral_cameras(0.3, forward=0.2, yaw=0.02),
    )


def two_plane_scene(channels: int = 1) -> SceneSpec:
    """Fronto-parallel near plane over the left half of a back wall; lateral motion."""
    return SceneSpec(
        channels=channels,
        planes=[
            PlaneSpec(
                normal=(0.0, 0.0, 1.0),
                offset=10.0,
                texture=TextureSpec(seed=11, min_wavelength=1.0),
            ),
            PlaneSpec(
                normal=(0.0, 0.0, 1.0),
                offset=5.0,
                texture=TextureSpec(seed=12, min_wavelength=0.5),
                bounds=(-20.0, -0.2, -50.0, 50.0),
            ),
        ],
        cameras=_lateral_cameras(0.25),
    )


def symmetric_lateral_scene() -> SceneSpec:
    """Pure sideways translation by ±b with no rotation, so F_b = −F_f."""
    return SceneSpec(
        planes=[
            PlaneSpec(normal=(0.0, 0.0, 1.0), offset=10.0, texture=TextureSpec(seed=21)),
            PlaneSpec(
                normal=(0.2, 0.0, 1.0),
                offset=6.0,
                texture=TextureSpec(seed=22, min_wavelength=0.6),
                bounds=(-20.0, -0.5, -50.0, 50.0),
            ),
        ],
        cameras=_lateral_cameras(0.3),
    )


def corner_scene() -> SceneSpec:
    """Back wall, left wall and floor: three mutually orthogonal planes."""
    return SceneSpec(
        planes=[
            PlaneSpec(normal=(0.0, 0.0, 1.0), offset=10.0, texture=TextureSpec(seed=31)),
            PlaneSpec(
                normal=(1.0, 0.0, 0.0),
                offset=-2.0,
                texture=TextureSpec(seed=32, min_wavelength=0.4),
            ),
            PlaneSpec(
                normal=(0.0, 1.0, 0.0),
                offset=1.5,
                texture=TextureSpec(seed=33, min_wavelength=0.4),
            ),
        ],
        cameras=[
            CameraSpec(rotation=(0.01, -0.03, 0.0), position=(-0.3, 0.05, -0.4)),
            CameraSpec(),
            CameraSpec(rotation=(-0.01, 0.03, 0.005), position=(0.3, -0.05, 0.4)),
        ],
    )


def gradcheck_scene() -> SceneSpec:
    """16×24 slanted wall over a floor; non-planar so F can be estimated."""
    return SceneSpec(
        height=GradientCheckDefaults.HEIGHT.value,
        width=GradientCheckDefaults.WIDTH.value,
        fx=20.0,
        fy=20.0,
        planes=[
            PlaneSpec(
                normal=(0.1, 0.05, 1.0),
                offset=6.0,
                texture=TextureSpec(seed=41, num_waves=6, min_wavelength=1.5),
            ),
            PlaneSpec(
                normal=(0.0, 1.0, 0.0),
                offset=1.2,
                texture=TextureSpec(seed=42, num_waves=6, min_wavelength=0.8),
            ),
        ],
        cameras=[
            CameraSpec(rotation=(0.0, -0.03, 0.0), position=(-0.3, 0.0, -0.1)),
            CameraSpec(),
            CameraSpec(rotation=(0.0, 0.03, 0.0), position=(0.3, 0.0, 0.1)),
        ],
    )


PRESETS = {
    "standard": standard_oracle_scene,
    "two_plane": two_plane_scene,
    "symmetric": symmetric_lateral_scene,
    "corner": corner_scene,
    "gradcheck": gradcheck_scene,
}
