"""Scaled dot-product attention and the additive pose-correction block."""

import logging
from typing import Dict, NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import softmax

from geowarp.core.exceptions import FieldError

from .models import POSE_DIM, CorrectionHead, FeatureMatrix, MotionDescriptor

logger = logging.getLogger(__name__)


def attention_weights(q: FeatureMatrix, k: FeatureMatrix) -> np.ndarray:
    """Row-wise softmax(QKᵀ/√d_k); every row sums to 1."""
    if q.cols != k.cols:
        raise FieldError(f"dimension mismatch: Q has {q.cols} columns, K has {k.cols}")
    scores = q.data @ k.data.T / np.sqrt(q.cols)
    return softmax(scores, axis=1)


def scaled_dot_attention(q: FeatureMatrix, k: FeatureMatrix, v: FeatureMatrix) -> FeatureMatrix:
    if k.rows != v.rows:
        raise FieldError(f"dimension mismatch: K has {k.rows} rows, V has {v.rows}")
    return FeatureMatrix(attention_weights(q, k) @ v.data)


class FusionResult(NamedTuple):
    forward: np.ndarray
    backward: np.ndarray
    correction: np.ndarray  # (2, 6)
    weights: np.ndarray  # (2, 2) attention weights
    # d(corrected[r, j]) / d(parameter), each shaped (2, 6) + parameter shape
    jacobians: Optional[Dict[str, np.ndarray]] = None


class _Forward(NamedTuple):
    x: np.ndarray
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    a: np.ndarray
    o: np.ndarray


def _forward(desc: MotionDescriptor) -> _Forward:
    x = desc.tokens
    q, k, v = x @ desc.w_q, x @ desc.w_k, x @ desc.w_v
    a = attention_weights(FeatureMatrix(q), FeatureMatrix(k))
    return _Forward(x, q, k, v, a, a @ v)


def _backward(
    desc: MotionDescriptor, head: CorrectionHead, f: _Forward, upstream: np.ndarray
) -> Dict[str, np.ndarray]:
    """Reverse-mode pass for one upstream (2, 6) cotangent on the correction."""
    d_o = upstream @ head.weight.T
    d_a = d_o @ f.v.T
    d_v = f.a.T @ d_o
    d_s = f.a * (d_a - np.sum(d_a * f.a, axis=1, keepdims=True))
    root = np.sqrt(desc.d_k)
    d_q = d_s @ f.k / root
    d_k = d_s.T @ f.q / root
    d_x = d_q @ desc.w_q.T + d_k @ desc.w_k.T + d_v @ desc.w_v.T
    return {
        "forward": d_x[0],
        "backward": d_x[1],
        "w_q": f.x.T @ d_q,
        "w_k": f.x.T @ d_k,
        "w_v": f.x.T @ d_v,
        "weight": f.o.T @ upstream,
        "bias": upstream.sum(axis=0),
    }


def pose_correction_fuse(
    desc: MotionDescriptor,
    head: CorrectionHead,
    base_forward: Sequence[float],
    base_backward: Sequence[float],
    with_jacobians: bool = False,
) -> FusionResult:
    """base + correction, where the correction is the attended motion tokens mapped to 6-D.

    The forward and backward descriptors are the two tokens; a zero head
    returns the base parameters unchanged.
    """
    if head.weight.shape[0] != desc.d_v:
        raise FieldError(
            f"dimension mismatch: head expects {head.weight.shape[0]} inputs, V has {desc.d_v}"
        )
    base = np.stack(
        [np.asarray(base_forward, dtype=np.float64), np.asarray(base_backward, dtype=np.float64)]
    )
    if base.shape != (2, POSE_DIM):
        raise FieldError(f"base poses must be two 6-vectors, got {base.shape}")
    f = _forward(desc)
    correction = f.o @ head.weight + head.bias
    corrected = base + correction

    jacobians = None
    if with_jacobians:
        jacobians = {}
        for r in range(2):
            for j in range(POSE_DIM):
                upstream = np.zeros((2, POSE_DIM))
                upstream[r, j] = 1.0
                for name, grad in _backward(desc, head, f, upstream).items():
                    if name not in jacobians:
                        jacobians[name] = np.zeros((2, POSE_DIM) + grad.shape)
                    jacobians[name][r, j] = grad
        eye = np.eye(POSE_DIM)
        jacobians["base_forward"] = np.stack([eye, np.zeros_like(eye)])
        jacobians["base_backward"] = np.stack([np.zeros_like(eye), eye])
    return FusionResult(corrected[0], corrected[1], correction, f.a, jacobians)
