"""
Test Configuration and Fixtures
Rendered oracle scenes and seeded generators shared by all test modules
"""

import numpy as np
import pytest

from geowarp.config.env_loader import STAGE_ITERATIONS_ENV_VAR, THREADS_ENV_VAR, load_env_file
from geowarp.core.fields.models import ImageBuffer
from geowarp.core.scene import (
    corner_scene,
    gradcheck_scene,
    render,
    standard_oracle_scene,
    symmetric_lateral_scene,
    two_plane_scene,
)

load_env_file()


def pytest_configure(config):
    """Configure pytest markers"""
    config.addinivalue_line(
        "markers",
        "integration: marks tests as integration tests (deselect with '-m \"not integration\"')",
    )
    config.addinivalue_line("markers", "slow: marks tests as slow (deselect with '-m \"not slow\"')")


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    """Run every test with the default worker and iteration settings unless it opts in."""
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
    monkeypatch.delenv(STAGE_ITERATIONS_ENV_VAR, raising=False)


@pytest.fixture
def rng():
    """Fresh seeded generator per test"""
    return np.random.default_rng(0)


@pytest.fixture
def random_image(rng):
    """Random 12x16 grayscale image"""
    return ImageBuffer(rng.uniform(0.05, 0.95, size=(12, 16, 1)))


def _rendered(factory):
    spec = factory()
    return spec, render(spec)


@pytest.fixture(scope="session")
def standard_scene():
    """64x96 oracle scene with a moving quad: (spec, frames)"""
    return _rendered(standard_oracle_scene)


@pytest.fixture(scope="session")
def two_plane():
    """Near plane over a back wall, lateral motion: (spec, frames)"""
    return _rendered(two_plane_scene)


@pytest.fixture(scope="session")
def symmetric_scene():
    """Pure sideways camera motion: (spec, frames)"""
    return _rendered(symmetric_lateral_scene)


@pytest.fixture(scope="session")
def corner():
    """Three orthogonal planes with general motion: (spec, frames)"""
    return _rendered(corner_scene)


@pytest.fixture(scope="session")
def small_scene():
    """16x24 gradient-check scene: (spec, frames)"""
    return _rendered(gradcheck_scene)
