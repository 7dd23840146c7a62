"""
Test Suite for Field Containers
Tests construction invariants of images, scalar, vector and mask fields
"""

import numpy as np
import pytest

from geowarp.core.exceptions import FieldError
from geowarp.core.fields.models import (
    ImageBuffer,
    MaskField,
    ScalarField,
    VectorField,
    pixel_grid,
    require_same_shape,
)


class TestImageBuffer:
    """Test ImageBuffer validation"""

    def test_grayscale_gets_channel_axis(self):
        """A 2-D array becomes a single-channel image"""
        image = ImageBuffer(np.full((4, 5), 0.5))
        assert image.data.shape == (4, 5, 1)
        assert image.channels == 1
        assert image.shape == (4, 5)

    def test_color_image(self):
        """Three channels are accepted"""
        image = ImageBuffer(np.zeros((2, 3, 3)))
        assert (image.height, image.width, image.channels) == (2, 3, 3)

    @pytest.mark.parametrize("value", [-0.01, 1.01])
    def test_out_of_range_rejected(self, value):
        """Intensities outside [0, 1] are rejected"""
        with pytest.raises(FieldError, match=r"\[0, 1\]"):
            ImageBuffer(np.full((3, 3), value))

    def test_two_channels_rejected(self):
        """Only 1 or 3 channels are valid"""
        with pytest.raises(FieldError, match="1\\|3"):
            ImageBuffer(np.zeros((3, 3, 2)))

    def test_non_finite_rejected(self):
        """NaN intensities are rejected"""
        data = np.zeros((3, 3))
        data[1, 1] = np.nan
        with pytest.raises(FieldError, match="non-finite"):
            ImageBuffer(data)

    def test_data_is_read_only_copy(self):
        """The buffer owns a read-only copy of its input"""
        source = np.full((3, 3), 0.25)
        image = ImageBuffer(source)
        source[0, 0] = 0.9
        assert image.data[0, 0, 0] == 0.25
        with pytest.raises(ValueError):
            image.data[0, 0, 0] = 0.5


class TestScalarField:
    """Test ScalarField roles and depth bounds"""

    def test_default_role(self):
        """Fields default to the error role"""
        assert ScalarField(np.zeros((2, 2))).role == "error"

    def test_unknown_role(self):
        """Roles outside the known set are rejected"""
        with pytest.raises(FieldError, match="Unknown ScalarField role"):
            ScalarField(np.ones((2, 2)), role="height")

    def test_depth_below_min_depth(self):
        """Depth values must stay above min_depth"""
        with pytest.raises(FieldError, match="min_depth"):
            ScalarField(np.array([[1.0, 1e-4]]), role="depth")

    def test_measurement_allows_missing_zeros(self):
        """Sparse measurements use 0 for missing values"""
        field = ScalarField(np.array([[0.0, 12.5]]), role="measurement")
        assert field.data[0, 0] == 0.0

    def test_rejects_vector_data(self):
        """Scalar fields are two-dimensional"""
        with pytest.raises(FieldError, match=r"\(H, W\)"):
            ScalarField(np.zeros((2, 2, 2)))


class TestVectorField:
    """Test VectorField shape handling"""

    def test_zeros(self):
        """zeros() builds an all-zero flow"""
        field = VectorField.zeros(3, 4)
        assert field.shape == (3, 4)
        assert not field.data.any()

    def test_wrong_trailing_axis(self):
        """The last axis must hold (u, v)"""
        with pytest.raises(FieldError, match=r"\(H, W, 2\)"):
            VectorField(np.zeros((3, 4, 3)))

    def test_infinite_rejected(self):
        """Infinite components are rejected"""
        data = np.zeros((2, 2, 2))
        data[0, 0, 1] = np.inf
        with pytest.raises(FieldError):
            VectorField(data)


class TestMaskField:
    """Test MaskField binary values"""

    def test_from_bool(self):
        """Boolean arrays become 0/1 masks"""
        mask = MaskField(np.array([[True, False], [False, True]]))
        assert mask.data.dtype == np.uint8
        assert mask.kept == 2
        np.testing.assert_array_equal(mask.as_bool(), [[True, False], [False, True]])

    def test_non_binary_rejected(self):
        """Values other than 0 and 1 are rejected"""
        with pytest.raises(FieldError, match="exactly 0 or 1"):
            MaskField(np.array([[0, 2]]))

    def test_ones(self):
        """ones() keeps every pixel"""
        assert MaskField.ones(3, 5).kept == 15


class TestHelpers:
    """Test pixel_grid and shape checks"""

    def test_pixel_grid_orientation(self):
        """Grid entries are (u, v) = (column, row)"""
        grid = pixel_grid(2, 3)
        assert grid.shape == (2, 3, 2)
        np.testing.assert_array_equal(grid[1, 2], [2.0, 1.0])

    def test_require_same_shape_mismatch(self):
        """Different grids raise a dimension mismatch"""
        with pytest.raises(FieldError, match="dimension mismatch"):
            require_same_shape((3, 4), (3, 4, 2), (4, 3))

    def test_require_same_shape_ignores_channels(self):
        """Only the first two axes are compared"""
        require_same_shape((3, 4), (3, 4, 2), (3, 4, 1))
