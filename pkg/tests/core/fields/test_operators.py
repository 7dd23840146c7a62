"""
Test Suite for Field Operators
Tests second differences, the SSIM map, box filtering and the image pyramid
"""

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from geowarp.core.exceptions import FieldError
from geowarp.core.fields import (
    ImageBuffer,
    ScalarField,
    VectorField,
    block_ratio,
    box_filter3,
    box_filter3_adjoint,
    build_pyramid,
    downsample,
    second_difference,
    ssim_map,
    ssim_support,
)
from geowarp.core.fields.operators import (
    C1,
    C2,
    downsample_adjoint,
    downsample_mask,
    pyramid_levels,
    second_difference_adjoint,
    second_difference_array,
)

finite = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)


def _windowed_ssim(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-pixel SSIM of 2-D arrays, one 3x3 window at a time."""
    pa, pb = np.pad(a, 1, mode="reflect"), np.pad(b, 1, mode="reflect")
    out = np.empty_like(a)
    for y in range(a.shape[0]):
        for x in range(a.shape[1]):
            wa = pa[y : y + 3, x : x + 3].ravel()
            wb = pb[y : y + 3, x : x + 3].ravel()
            mu_a, mu_b = wa.mean(), wb.mean()
            var_a = np.mean((wa - mu_a) ** 2)
            var_b = np.mean((wb - mu_b) ** 2)
            cov = np.mean((wa - mu_a) * (wb - mu_b))
            out[y, x] = ((2 * mu_a * mu_b + C1) * (2 * cov + C2)) / (
                (mu_a**2 + mu_b**2 + C1) * (var_a + var_b + C2)
            )
    return out


class TestSecondDifference:
    """Test xx / yy second differences"""

    def test_constant_field(self):
        """A constant has no curvature"""
        dxx, dyy = second_difference(ScalarField(np.full((4, 5), 3.0)))
        assert not dxx.any() and not dyy.any()

    def test_linear_ramp(self):
        """f(x, y) = x has zero second derivative"""
        ramp = np.tile(np.arange(6.0), (4, 1))
        dxx, dyy = second_difference(ScalarField(ramp))
        assert not dxx.any() and not dyy.any()

    def test_quadratic_row(self):
        """f = x² gives 2 at interior columns and 0 on the border"""
        field = np.tile(np.arange(6.0) ** 2, (4, 1))
        dxx, dyy = second_difference_array(field)
        np.testing.assert_array_equal(dxx[:, 1:-1], 2.0)
        np.testing.assert_array_equal(dxx[:, [0, -1]], 0.0)
        assert not dyy.any()

    def test_vector_field_per_channel(self):
        """Each flow component is differenced separately"""
        data = np.zeros((3, 4, 2))
        data[..., 1] = (np.arange(3.0) ** 2)[:, None]
        dxx, dyy = second_difference(VectorField(data))
        assert dyy.shape == (3, 4, 2)
        np.testing.assert_array_equal(dyy[1, :, 1], 2.0)
        assert not dyy[..., 0].any()

    def test_too_small(self):
        """Fields narrower than 3 are rejected"""
        with pytest.raises(FieldError, match="3x3"):
            second_difference_array(np.zeros((2, 5)))

    @settings(max_examples=30, deadline=None)
    @given(
        f=hnp.arrays(np.float64, (4, 5), elements=finite),
        g=hnp.arrays(np.float64, (4, 5), elements=finite),
        alpha=finite,
        beta=finite,
    )
    def test_linearity(self, f, g, alpha, beta):
        """op(αf + βg) = α·op(f) + β·op(g)"""
        combined = second_difference_array(alpha * f + beta * g)
        parts_f = second_difference_array(f)
        parts_g = second_difference_array(g)
        for k in range(2):
            np.testing.assert_allclose(
                combined[k], alpha * parts_f[k] + beta * parts_g[k], rtol=1e-9, atol=1e-6
            )

    def test_adjoint(self, rng):
        """<D f, g> = <f, Dᵀ g>"""
        f = rng.standard_normal((5, 6))
        gxx, gyy = rng.standard_normal((5, 6)), rng.standard_normal((5, 6))
        dxx, dyy = second_difference_array(f)
        lhs = np.sum(dxx * gxx) + np.sum(dyy * gyy)
        rhs = np.sum(f * second_difference_adjoint(gxx, gyy))
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestSsimMap:
    """Test the per-pixel SSIM"""

    def test_identical_inputs(self, random_image):
        """SSIM(a, a) is 1 everywhere"""
        ssim = ssim_map(random_image, random_image)
        assert ssim.role == "weight"
        np.testing.assert_allclose(ssim.data, 1.0, atol=1e-12)

    def test_equal_constants(self):
        """Zero variance windows are handled by the stabilizers"""
        a = ImageBuffer(np.full((5, 5), 0.2))
        np.testing.assert_allclose(ssim_map(a, a).data, 1.0, atol=1e-12)

    def test_inverted_image_matches_window_oracle(self, random_image):
        """SSIM(a, 1 − a) agrees with a direct per-window evaluation"""
        inverted = ImageBuffer(1.0 - random_image.data)
        ssim = ssim_map(random_image, inverted)
        expected = _windowed_ssim(random_image.data[..., 0], inverted.data[..., 0])
        np.testing.assert_allclose(ssim.data, expected, atol=1e-12)
        assert np.all(ssim.data >= -1.0) and np.all(ssim.data <= 1.0)

    def test_color_channels_are_averaged(self, rng):
        """Multi-channel SSIM is the channel mean"""
        a = rng.uniform(size=(6, 7, 3))
        b = rng.uniform(size=(6, 7, 3))
        ssim = ssim_map(ImageBuffer(a), ImageBuffer(b))
        expected = np.mean([_windowed_ssim(a[..., c], b[..., c]) for c in range(3)], axis=0)
        np.testing.assert_allclose(ssim.data, expected, atol=1e-12)

    def test_dimension_mismatch(self):
        """Images must share a grid"""
        with pytest.raises(FieldError, match="dimension mismatch"):
            ssim_map(ImageBuffer(np.zeros((4, 4))), ImageBuffer(np.zeros((4, 5))))

    def test_inputs_unmodified(self, random_image):
        """SSIM does not touch its inputs"""
        before = random_image.data.copy()
        ssim_map(random_image, ImageBuffer(1.0 - before))
        np.testing.assert_array_equal(random_image.data, before)


class TestSsimSupport:
    """Test the mask of pixels whose SSIM window is fully kept"""

    def test_hole_erodes_its_window(self):
        """A dropped pixel removes itself and its eight neighbours"""
        mask = np.ones((9, 9), dtype=bool)
        mask[4, 5] = False
        support = ssim_support(mask)
        assert not support[3:6, 4:7].any()
        assert support.sum() == 81 - 9

    def test_border_not_eroded(self):
        """A full mask keeps every pixel, edges included"""
        assert ssim_support(np.ones((5, 7))).all()

    def test_excluded_column(self):
        """Columns next to an excluded one leave the support"""
        mask = np.ones((6, 8), dtype=bool)
        mask[:, 3] = False
        support = ssim_support(mask)
        assert not support[:, 2:5].any()
        assert support[:, [0, 1, 5, 6, 7]].all()


class TestBlockRatio:
    """Test the max/min ratio of 2x2 depth blocks"""

    def test_flat_and_step(self):
        """A flat block has ratio 1, a block straddling a step its depth ratio"""
        depth = np.ones((4, 4))
        depth[0, 1] = 3.0
        ratio = block_ratio(depth)
        assert ratio.shape == (2, 2)
        assert ratio[0, 0] == pytest.approx(3.0)
        np.testing.assert_allclose(ratio.ravel()[1:], 1.0)

    def test_nonpositive_block(self):
        """A block with a zero depth is unbounded"""
        depth = np.ones((4, 4))
        depth[3, 3] = 0.0
        assert np.isinf(block_ratio(depth)[1, 1])

    def test_odd_shape_cropped(self):
        """An odd trailing row and column are dropped like in downsample"""
        assert block_ratio(np.ones((5, 7))).shape == (2, 3)


class TestBoxFilter:
    """Test the mirror-padded 3x3 mean and its adjoint"""

    def test_constant_preserved(self):
        """Averaging a constant returns the constant"""
        np.testing.assert_allclose(box_filter3(np.full((4, 4, 1), 0.7)), 0.7)

    def test_adjoint(self, rng):
        """<B x, g> = <x, Bᵀ g>"""
        x = rng.standard_normal((5, 6, 2))
        g = rng.standard_normal((5, 6, 2))
        assert np.sum(box_filter3(x) * g) == pytest.approx(
            np.sum(x * box_filter3_adjoint(g)), rel=1e-12
        )


class TestPyramid:
    """Test area downsampling and level selection"""

    def test_downsample_area_average(self):
        """Each coarse pixel averages a 2x2 block"""
        a = np.arange(16.0).reshape(4, 4)
        np.testing.assert_allclose(downsample(a), [[2.5, 4.5], [10.5, 12.5]])

    def test_odd_trailing_row_dropped(self):
        """A 5x5 field downsamples to 2x2"""
        assert downsample(np.zeros((5, 5))).shape == (2, 2)

    def test_downsample_adjoint(self, rng):
        """<P x, g> = <x, Pᵀ g> with odd fine sizes"""
        x = rng.standard_normal((7, 9))
        g = rng.standard_normal((3, 4))
        assert np.sum(downsample(x) * g) == pytest.approx(
            np.sum(x * downsample_adjoint(g, x.shape)), rel=1e-12
        )

    def test_downsample_mask_requires_all_four(self):
        """A coarse pixel survives only if its whole block is kept"""
        mask = np.ones((4, 4), dtype=np.uint8)
        mask[0, 1] = 0
        np.testing.assert_array_equal(downsample_mask(mask), [[0, 1], [1, 1]])

    def test_levels_for_standard_scene(self):
        """64x96 supports the full four levels"""
        assert pyramid_levels(64, 96, 4) == 4

    def test_levels_capped_with_warning(self, caplog):
        """16x24 supports three levels and says so"""
        with caplog.at_level(logging.WARNING, logger="geowarp.core.fields.operators"):
            assert pyramid_levels(16, 24, 4) == 3
        assert "pyramid capped" in caplog.text

    def test_at_least_one_level(self):
        """Tiny fields still get the full-resolution level"""
        assert pyramid_levels(2, 2, 3) == 1

    def test_build_pyramid_shapes(self):
        """Each level halves both sides"""
        shapes = [level.shape for level in build_pyramid(np.zeros((16, 24, 1)), 3)]
        assert shapes == [(16, 24, 1), (8, 12, 1), (4, 6, 1)]
