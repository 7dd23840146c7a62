"""
Test Suite for Motion Attention
Tests scaled dot-product attention and the additive pose-correction block
"""

import numpy as np
import pytest

from geowarp.core.attention import (
    AttentionConfig,
    CorrectionHead,
    FeatureMatrix,
    MotionDescriptor,
    attention_weights,
    pose_correction_fuse,
    scaled_dot_attention,
)
from geowarp.core.exceptions import FieldError

BASE_F = [0.01, -0.02, 0.0, 0.3, 0.0, 0.1]
BASE_B = [-0.01, 0.02, 0.0, -0.3, 0.0, -0.1]


class TestFeatureMatrix:
    """Test FeatureMatrix validation"""

    def test_non_finite(self):
        """NaN entries are rejected"""
        with pytest.raises(FieldError, match="non-finite"):
            FeatureMatrix([[1.0, float("nan")]])

    def test_requires_matrix(self):
        """Vectors are not matrices"""
        with pytest.raises(FieldError, match="2-D"):
            FeatureMatrix([1.0, 2.0])

    def test_empty(self):
        """At least one row and one column"""
        with pytest.raises(FieldError, match="at least one"):
            FeatureMatrix(np.zeros((0, 3)))


class TestScaledDotAttention:
    """Test softmax(QKᵀ/√d_k)·V"""

    def test_rows_sum_to_one(self, rng):
        """Each query distributes unit weight over the keys"""
        weights = attention_weights(
            FeatureMatrix(rng.standard_normal((4, 3))), FeatureMatrix(rng.standard_normal((5, 3)))
        )
        assert weights.shape == (4, 5)
        np.testing.assert_allclose(weights.sum(axis=1), 1.0)
        assert (weights > 0).all()

    def test_single_key(self, rng):
        """One key takes all the weight; output is that value row"""
        v = FeatureMatrix([[2.0, -1.0]])
        out = scaled_dot_attention(
            FeatureMatrix(rng.standard_normal((3, 4))), FeatureMatrix(rng.standard_normal((1, 4))), v
        )
        np.testing.assert_allclose(out.data, [[2.0, -1.0]] * 3)

    def test_zero_queries_average_values(self, rng):
        """Uniform weights return the mean value row"""
        v = rng.standard_normal((4, 2))
        out = scaled_dot_attention(
            FeatureMatrix(np.zeros((2, 3))), FeatureMatrix(rng.standard_normal((4, 3))), FeatureMatrix(v)
        )
        np.testing.assert_allclose(out.data, np.tile(v.mean(axis=0), (2, 1)))

    def test_scaling_by_root_dk(self):
        """Scores are divided by √d_k before the softmax"""
        q = FeatureMatrix([[1.0, 1.0, 1.0, 1.0]])
        k = FeatureMatrix([[1.0, 1.0, 1.0, 1.0], [0.0, 0.0, 0.0, 0.0]])
        weights = attention_weights(q, k)
        assert weights[0, 0] == pytest.approx(np.exp(2.0) / (np.exp(2.0) + 1.0))

    def test_large_scores_stay_finite(self):
        """Softmax is evaluated stably"""
        q = FeatureMatrix([[1e3, 0.0]])
        k = FeatureMatrix([[1e3, 0.0], [-1e3, 0.0]])
        weights = attention_weights(q, k)
        np.testing.assert_allclose(weights, [[1.0, 0.0]])

    def test_dimension_mismatch(self, rng):
        """Q and K need the same width; K and V the same height"""
        with pytest.raises(FieldError, match="dimension mismatch"):
            attention_weights(FeatureMatrix(np.ones((2, 3))), FeatureMatrix(np.ones((2, 4))))
        with pytest.raises(FieldError, match="dimension mismatch"):
            scaled_dot_attention(
                FeatureMatrix(np.ones((2, 3))), FeatureMatrix(np.ones((2, 3))), FeatureMatrix(np.ones((3, 1)))
            )


class TestMotionDescriptor:
    """Test descriptor validation"""

    def test_random_shapes(self):
        """Seeded construction follows the configured dimensions"""
        desc = MotionDescriptor.random(AttentionConfig(descriptor_dim=5, d_k=3, d_v=4), seed=2)
        assert desc.tokens.shape == (2, 5)
        assert (desc.d_k, desc.d_v) == (3, 4)

    def test_projection_rows(self, rng):
        """Projections take descriptor-dimension inputs"""
        with pytest.raises(FieldError, match="rows"):
            MotionDescriptor(np.ones(3), np.ones(3), np.ones((4, 2)), np.ones((3, 2)), np.ones((3, 2)))

    def test_query_key_width(self):
        """w_q and w_k share d_k"""
        with pytest.raises(FieldError, match="same d_k"):
            MotionDescriptor(np.ones(3), np.ones(3), np.ones((3, 2)), np.ones((3, 4)), np.ones((3, 2)))

    def test_token_mismatch(self):
        """Both tokens have the same dimension"""
        with pytest.raises(FieldError, match="dimension mismatch"):
            MotionDescriptor(np.ones(3), np.ones(4), np.ones((3, 2)), np.ones((3, 2)), np.ones((3, 2)))


class TestPoseCorrectionFuse:
    """Test base + correction"""

    def test_zero_head_is_identity(self):
        """A zero correction head returns the base poses"""
        desc = MotionDescriptor.random(seed=0)
        result = pose_correction_fuse(desc, CorrectionHead.zeros(desc.d_v), BASE_F, BASE_B)
        np.testing.assert_array_equal(result.forward, BASE_F)
        np.testing.assert_array_equal(result.backward, BASE_B)
        assert not result.correction.any()

    def test_bias_only(self):
        """A bias-only head shifts both directions equally"""
        desc = MotionDescriptor.random(seed=0)
        bias = np.arange(6.0) / 10
        head = CorrectionHead(np.zeros((desc.d_v, 6)), bias)
        result = pose_correction_fuse(desc, head, BASE_F, BASE_B)
        np.testing.assert_allclose(result.forward, np.add(BASE_F, bias))
        np.testing.assert_allclose(result.backward, np.add(BASE_B, bias))

    def test_token_swap_swaps_corrections(self):
        """Attention is permutation-equivariant over the two tokens"""
        desc = MotionDescriptor.random(seed=4)
        head = CorrectionHead.random(desc.d_v, seed=5, scale=0.5)
        a = pose_correction_fuse(desc, head, np.zeros(6), np.zeros(6))
        b = pose_correction_fuse(desc.swapped(), head, np.zeros(6), np.zeros(6))
        np.testing.assert_allclose(b.forward, a.backward, atol=1e-14)
        np.testing.assert_allclose(b.backward, a.forward, atol=1e-14)

    def test_weights_are_two_by_two(self):
        """Each direction attends over both tokens"""
        desc = MotionDescriptor.random(seed=1)
        result = pose_correction_fuse(desc, CorrectionHead.zeros(desc.d_v), BASE_F, BASE_B)
        assert result.weights.shape == (2, 2)
        np.testing.assert_allclose(result.weights.sum(axis=1), 1.0)

    def test_head_width_mismatch(self):
        """The head consumes d_v features"""
        desc = MotionDescriptor.random(AttentionConfig(d_v=4), seed=0)
        with pytest.raises(FieldError, match="dimension mismatch"):
            pose_correction_fuse(desc, CorrectionHead.zeros(5), BASE_F, BASE_B)

    def test_base_shape(self):
        """Base poses are 6-vectors"""
        desc = MotionDescriptor.random(seed=0)
        with pytest.raises(FieldError, match="two 6-vectors"):
            pose_correction_fuse(desc, CorrectionHead.zeros(desc.d_v), [0.0] * 5, [0.0] * 5)

    @pytest.mark.parametrize("name", ["forward", "backward", "w_q", "w_k", "w_v"])
    def test_descriptor_jacobians(self, name):
        """Reverse-mode Jacobians agree with central differences"""
        cfg = AttentionConfig(descriptor_dim=4, d_k=3, d_v=3)
        desc = MotionDescriptor.random(cfg, seed=7)
        head = CorrectionHead.random(cfg.d_v, seed=8, scale=0.5)
        result = pose_correction_fuse(desc, head, BASE_F, BASE_B, with_jacobians=True)
        parameter = np.array(getattr(desc, name))
        step = 1e-6
        for index in np.ndindex(parameter.shape):
            values = {n: np.array(getattr(desc, n)) for n in ("forward", "backward", "w_q", "w_k", "w_v")}
            values[name][index] += step
            plus = pose_correction_fuse(MotionDescriptor(**values), head, BASE_F, BASE_B)
            values[name][index] -= 2 * step
            minus = pose_correction_fuse(MotionDescriptor(**values), head, BASE_F, BASE_B)
            numeric = (np.stack([plus.forward, plus.backward]) - np.stack([minus.forward, minus.backward])) / (2 * step)
            np.testing.assert_allclose(
                result.jacobians[name][(slice(None), slice(None)) + index], numeric, atol=1e-8
            )

    def test_head_and_base_jacobians(self):
        """Bias and base poses enter linearly"""
        desc = MotionDescriptor.random(seed=3)
        head = CorrectionHead.random(desc.d_v, seed=3)
        result = pose_correction_fuse(desc, head, BASE_F, BASE_B, with_jacobians=True)
        for r in range(2):
            np.testing.assert_array_equal(result.jacobians["bias"][r], np.eye(6))
        np.testing.assert_array_equal(result.jacobians["base_forward"][0], np.eye(6))
        assert not result.jacobians["base_forward"][1].any()
