"""
Test Suite for the Epipolar Loss
Tests the L1 distance between F_est and F_cal, its pose gradient and text dumps
"""

import logging

import numpy as np
import pytest

from geowarp.core.exceptions import ParseError
from geowarp.core.geometry import Intrinsics, PoseSE3
from geowarp.core.epipolar import (
    CorrespondenceSet,
    epipolar_loss,
    epipolar_value_and_grad,
    fundamental_from_pose,
    read_fundamental_text,
    write_correspondences_text,
    write_fundamental_text,
)

K = Intrinsics(60.0, 60.0, 23.5, 15.5)
PARAMS = np.array([0.03, -0.02, 0.01, 0.25, -0.05, 0.1])
OTHER = PoseSE3.from_params([-0.05, 0.04, 0.02, -0.1, 0.2, 0.3])


class TestEpipolarLoss:
    """Test L_g = Σ|F_est − F_cal|"""

    def test_identical(self):
        """Equal matrices cost nothing"""
        f = fundamental_from_pose(OTHER, K)
        assert epipolar_loss(f, f) == 0.0

    def test_symmetric_and_positive(self):
        """Different matrices have a positive, symmetric distance"""
        a = fundamental_from_pose(OTHER, K)
        b = fundamental_from_pose(PoseSE3.from_params(PARAMS), K)
        assert epipolar_loss(a, b) > 0.0
        assert epipolar_loss(a, b) == epipolar_loss(b, a)

    def test_value_matches_pose_fundamental(self):
        """The parametric value equals the loss against F from the same pose"""
        f_est = fundamental_from_pose(OTHER, K)
        value, _, degenerate = epipolar_value_and_grad(PARAMS, K, f_est.matrix)
        expected = epipolar_loss(f_est, fundamental_from_pose(PoseSE3.from_params(PARAMS), K))
        assert not degenerate
        assert value == pytest.approx(expected, abs=1e-12)

    def test_zero_at_truth(self):
        """F_est equal to F from the current pose gives zero"""
        f_est = fundamental_from_pose(PoseSE3.from_params(PARAMS), K)
        value, _, _ = epipolar_value_and_grad(PARAMS, K, f_est.matrix)
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_gradient_matches_differences(self):
        """Analytic pose gradient agrees with central differences"""
        f_est = fundamental_from_pose(OTHER, K).matrix
        _, grad, _ = epipolar_value_and_grad(PARAMS, K, f_est)
        step = 1e-6
        for j in range(6):
            e = np.zeros(6)
            e[j] = step
            plus, _, _ = epipolar_value_and_grad(PARAMS + e, K, f_est)
            minus, _, _ = epipolar_value_and_grad(PARAMS - e, K, f_est)
            assert grad[j] == pytest.approx((plus - minus) / (2 * step), rel=1e-5, abs=1e-8)

    def test_translation_scale_has_no_gradient(self):
        """F_cal is invariant to the translation length, so ∂L/∂t ⟂ t"""
        f_est = fundamental_from_pose(OTHER, K).matrix
        _, grad, _ = epipolar_value_and_grad(PARAMS, K, f_est)
        assert np.dot(grad[3:], PARAMS[3:]) == pytest.approx(0.0, abs=1e-10)

    def test_zero_translation_is_skipped(self, caplog):
        """Pure rotation: value 0, zero gradient, flagged degenerate"""
        f_est = fundamental_from_pose(OTHER, K).matrix
        with caplog.at_level(logging.WARNING, logger="geowarp.core.epipolar.loss"):
            value, grad, degenerate = epipolar_value_and_grad([0.1, 0.0, 0.0, 0, 0, 0], K, f_est)
        assert (value, degenerate) == (0.0, True)
        assert not grad.any()
        assert "translation below" in caplog.text


class TestTextDumps:
    """Test plain-text F and correspondence files"""

    def test_fundamental_round_trip(self, tmp_path):
        """Nine row-major floats, read back exactly"""
        f = fundamental_from_pose(OTHER, K)
        write_fundamental_text(tmp_path / "F.txt", f)
        assert len((tmp_path / "F.txt").read_text().split()) == 9
        np.testing.assert_allclose(read_fundamental_text(tmp_path / "F.txt").matrix, f.matrix)

    def test_wrong_count(self, tmp_path):
        """Anything but nine tokens is rejected"""
        (tmp_path / "F.txt").write_text("1 2 3\n")
        with pytest.raises(ParseError, match="expected 9 floats"):
            read_fundamental_text(tmp_path / "F.txt")

    def test_non_numeric(self, tmp_path):
        """Tokens must parse as floats"""
        (tmp_path / "F.txt").write_text("1 2 3 4 5 6 7 8 x\n")
        with pytest.raises(ParseError, match="line 1"):
            read_fundamental_text(tmp_path / "F.txt")

    def test_correspondences(self, tmp_path):
        """One u v u' v' row per pair after a header"""
        corr = CorrespondenceSet(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[1.5, 2.0], [3.5, 4.0]]))
        write_correspondences_text(tmp_path / "c.txt", corr)
        lines = (tmp_path / "c.txt").read_text().splitlines()
        assert lines[0].startswith("#")
        np.testing.assert_allclose(np.loadtxt(tmp_path / "c.txt"), [[1, 2, 1.5, 2], [3, 4, 3.5, 4]])
