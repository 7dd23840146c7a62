"""
Test Suite for Fundamental Matrix Estimation
Tests F from pose, the normalized eight-point solver, RANSAC and flow sampling
"""

import logging

import numpy as np
import pytest

from geowarp.core.exceptions import (
    DegenerateMotionError,
    EstimationError,
    InsufficientCorrespondencesError,
)
from geowarp.core.fields.models import MaskField, VectorField
from geowarp.core.geometry import Intrinsics, PoseSE3, project
from geowarp.core.epipolar import (
    CorrespondenceSet,
    FundamentalMatrix,
    RansacConfig,
    canonicalize,
    eight_point,
    epipolar_loss,
    estimate_from_flow,
    fundamental_from_pose,
    hartley_transform,
    ransac_fundamental,
    sample_correspondences,
    sampson_errors,
)

K = Intrinsics(80.0, 80.0, 47.5, 31.5)
MOTION = PoseSE3.from_params([0.02, -0.03, 0.01, 0.3, 0.05, -0.1])


def _exact_pairs(rng, n=60):
    points = np.column_stack(
        [rng.uniform(-2, 2, n), rng.uniform(-1.5, 1.5, n), rng.uniform(4, 10, n)]
    )
    src = np.array([project(p, K) for p in points])
    dst = np.array([project(MOTION.apply(p), K) for p in points])
    return CorrespondenceSet(src, dst)


def _with_outliers(rng, n=100, n_out=30, offset=15.0):
    """Exact pairs whose last ``n_out`` targets are pushed ``offset`` px off their epipolar line."""
    corr = _exact_pairs(rng, n)
    truth = fundamental_from_pose(MOTION, K).matrix
    dst = corr.dst.copy()
    for k in range(n - n_out, n):
        line = truth @ np.array([*corr.src[k], 1.0])
        dst[k] += offset * line[:2] / np.linalg.norm(line[:2])
    return CorrespondenceSet(corr.src, dst)


class TestCanonicalForm:
    """Test FundamentalMatrix invariants"""

    def test_canonicalize(self):
        """Unit norm with a positive largest-magnitude entry"""
        matrix = canonicalize(np.array([[0.0, 1.0, 0.0], [-3.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
        assert np.linalg.norm(matrix) == pytest.approx(1.0)
        assert matrix[1, 0] > 0

    def test_zero_matrix(self):
        """The zero matrix has no canonical form"""
        with pytest.raises(EstimationError, match="zero"):
            canonicalize(np.zeros((3, 3)))

    def test_unnormalized_rejected(self):
        """Direct construction requires a canonical matrix"""
        truth = fundamental_from_pose(MOTION, K).matrix
        with pytest.raises(EstimationError, match="canonicalized"):
            FundamentalMatrix(2.0 * truth)

    def test_full_rank_rejected(self):
        """Rank 3 matrices are not fundamental matrices"""
        with pytest.raises(EstimationError, match="rank 2"):
            FundamentalMatrix(np.eye(3) / np.sqrt(3.0))

    def test_from_raw_enforces_rank(self, rng):
        """from_raw projects any matrix to rank 2"""
        fundamental = FundamentalMatrix.from_raw(rng.standard_normal((3, 3)))
        assert np.linalg.matrix_rank(fundamental.matrix, tol=1e-10) == 2


class TestFundamentalFromPose:
    """Test F = K⁻ᵀ [t]x R K⁻¹"""

    def test_epipolar_constraint(self, rng):
        """Exact correspondences satisfy p'ᵀ F p = 0"""
        corr = _exact_pairs(rng)
        residuals = fundamental_from_pose(MOTION, K).algebraic_residuals(corr.src, corr.dst)
        np.testing.assert_allclose(residuals, 0.0, atol=1e-10)

    def test_scale_invariant(self):
        """Scaling the translation does not change the canonical F"""
        scaled = PoseSE3(MOTION.rotation, 4.0 * MOTION.translation)
        np.testing.assert_allclose(
            fundamental_from_pose(scaled, K).matrix,
            fundamental_from_pose(MOTION, K).matrix,
            atol=1e-14,
        )

    def test_pure_rotation(self):
        """Translation below 1e-6 is degenerate"""
        with pytest.raises(DegenerateMotionError, match="translation"):
            fundamental_from_pose(PoseSE3.from_params([0.1, 0, 0, 0, 0, 1e-8]), K)

    def test_oracle_scene(self, corner):
        """The rendered flow of a static scene obeys the pose-derived F"""
        spec, frames = corner
        centre = frames[1]
        valid = centre.valid_forward.as_bool()
        src = np.argwhere(valid)[:, ::-1].astype(float)
        dst = src + centre.flow_forward.data[valid]
        residuals = fundamental_from_pose(centre.pose_forward, spec.intrinsics).algebraic_residuals(
            src, dst
        )
        assert np.abs(residuals).max() < 1e-6


class TestEightPoint:
    """Test the normalized linear solver"""

    def test_hartley_normalization(self, rng):
        """Centroid at the origin, mean distance √2"""
        points = rng.uniform(0, 100, (50, 2))
        transform = hartley_transform(points)
        moved = (np.column_stack([points, np.ones(50)]) @ transform.T)[:, :2]
        np.testing.assert_allclose(moved.mean(axis=0), 0.0, atol=1e-12)
        assert np.mean(np.linalg.norm(moved, axis=1)) == pytest.approx(np.sqrt(2.0))

    def test_coincident_points(self):
        """Identical points cannot be normalized"""
        with pytest.raises(EstimationError, match="coincide"):
            hartley_transform(np.ones((10, 2)))

    def test_recovers_truth(self, rng):
        """Exact pairs give the pose-derived F"""
        estimate = eight_point(_exact_pairs(rng))
        truth = fundamental_from_pose(MOTION, K)
        assert epipolar_loss(estimate, truth) < 1e-6

    def test_exactly_eight(self, rng):
        """Eight pairs are enough"""
        corr = _exact_pairs(rng, 8)
        estimate = eight_point(corr)
        np.testing.assert_allclose(
            estimate.algebraic_residuals(corr.src, corr.dst), 0.0, atol=1e-6
        )

    def test_collinear_sources(self, rng):
        """Sources on one image line leave the design matrix rank deficient"""
        t = np.linspace(5.0, 60.0, 12)
        src = np.column_stack([t, 0.5 * t + 3.0])
        corr = CorrespondenceSet(src, src + rng.uniform(-2.0, 2.0, (12, 2)))
        with pytest.raises(EstimationError, match="degenerate"):
            eight_point(corr)

    def test_similarity_shift_invariance(self, rng):
        """Scaling and shifting both images maps the estimate by the same transform"""
        corr = _exact_pairs(rng)
        transform = np.array([[2.0, 0.0, 13.0], [0.0, 2.0, -7.0], [0.0, 0.0, 1.0]])
        moved = CorrespondenceSet(
            corr.src * 2.0 + [13.0, -7.0], corr.dst * 2.0 + [13.0, -7.0]
        )
        inverse = np.linalg.inv(transform)
        expected = FundamentalMatrix.from_raw(
            inverse.T @ eight_point(corr).matrix @ inverse, enforce_rank=False
        )
        assert epipolar_loss(eight_point(moved), expected) < 1e-8

    def test_seven_pairs(self, rng):
        """Fewer than eight pairs are rejected"""
        with pytest.raises(InsufficientCorrespondencesError, match="got 7"):
            eight_point(_exact_pairs(rng, 7))

    def test_sampson_zero_on_exact_pairs(self, rng):
        """Exact pairs have no Sampson error"""
        corr = _exact_pairs(rng)
        errors = sampson_errors(fundamental_from_pose(MOTION, K), corr)
        assert errors.max() < 1e-12


class TestRansac:
    """Test robust estimation"""

    def test_separates_outliers(self, rng):
        """Every exact pair is an inlier, every displaced one an outlier"""
        corr = _with_outliers(rng)
        fundamental, inliers = ransac_fundamental(corr, RansacConfig(seed=3))
        assert inliers[:70].all()
        assert not inliers[70:].any()
        assert epipolar_loss(fundamental, fundamental_from_pose(MOTION, K)) < 1e-6

    def test_deterministic(self, rng):
        """Same seed, same F and inliers"""
        corr = _with_outliers(rng)
        a, inliers_a = ransac_fundamental(corr, RansacConfig(seed=11))
        b, inliers_b = ransac_fundamental(corr, RansacConfig(seed=11))
        np.testing.assert_array_equal(a.matrix, b.matrix)
        np.testing.assert_array_equal(inliers_a, inliers_b)

    def test_too_few_pairs(self, rng):
        """RANSAC needs eight pairs"""
        with pytest.raises(InsufficientCorrespondencesError):
            ransac_fundamental(_exact_pairs(rng, 5))

    def test_no_consensus(self, rng):
        """Random pairs fall below the inlier fraction floor"""
        corr = CorrespondenceSet(rng.uniform(0, 96, (60, 2)), rng.uniform(0, 96, (60, 2)))
        with pytest.raises(EstimationError, match="RANSAC failed"):
            ransac_fundamental(corr, RansacConfig(max_iterations=50, min_inlier_fraction=0.9))


class TestFlowSampling:
    """Test correspondence sampling from a flow field"""

    @pytest.fixture
    def shifted(self):
        flow = np.zeros((8, 10, 2))
        flow[..., 0] = 1.0
        left = np.zeros((8, 10))
        left[:, :5] = 1
        return VectorField(flow), MaskField(left)

    def test_respects_masks(self, shifted):
        """Sources are kept pixels and targets are p + F(p)"""
        flow, mask = shifted
        corr = sample_correspondences(flow, [mask], 20, seed=4)
        assert len(corr) == 20
        assert (corr.src[:, 0] < 5).all()
        np.testing.assert_array_equal(corr.dst, corr.src + [1.0, 0.0])
        assert np.all(np.diff(corr.pixel_index) > 0)

    def test_out_of_view_targets_excluded(self, shifted):
        """The last column flows out of the image"""
        flow, _ = shifted
        corr = sample_correspondences(flow, [], 1000, seed=0)
        assert len(corr) == 8 * 9
        assert corr.dst[:, 0].max() <= 9

    def test_seeded(self, shifted):
        """Same seed, same sample"""
        flow, mask = shifted
        a = sample_correspondences(flow, [mask], 10, seed=1)
        b = sample_correspondences(flow, [mask], 10, seed=1)
        np.testing.assert_array_equal(a.pixel_index, b.pixel_index)

    def test_too_few_eligible(self, shifted):
        """Masks leaving fewer than eight pixels are rejected"""
        flow, _ = shifted
        tiny = np.zeros((8, 10))
        tiny[0, :3] = 1
        with pytest.raises(InsufficientCorrespondencesError, match="eligible"):
            sample_correspondences(flow, [MaskField(tiny)], 10)


class TestEstimateFromFlow:
    """Test the flow-to-F pipeline"""

    def test_oracle_flow_recovers_pose_fundamental(self, corner):
        """Exact static flow gives the pose-derived F"""
        spec, frames = corner
        centre = frames[1]
        estimate = estimate_from_flow(centre.flow_forward, [centre.valid_forward])
        assert estimate is not None
        truth = fundamental_from_pose(centre.pose_forward, spec.intrinsics)
        assert epipolar_loss(estimate, truth) < 1e-5

    def test_failure_returns_none(self, caplog):
        """Estimation failure is logged, not raised"""
        flow = VectorField(np.zeros((8, 8, 2)))
        with caplog.at_level(logging.WARNING, logger="geowarp.core.epipolar.estimation"):
            result = estimate_from_flow(flow, [MaskField(np.zeros((8, 8)))])
        assert result is None
        assert "estimation failed" in caplog.text
