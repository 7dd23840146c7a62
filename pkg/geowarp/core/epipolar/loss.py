import logging
from typing import Tuple

import numpy as np

from geowarp.config.constants import RansacDefaults
from geowarp.core.geometry import Intrinsics, rotation_derivatives, skew
from geowarp.core.geometry.so3 import exp_so3

from .models import FundamentalMatrix

logger = logging.getLogger(__name__)


def epipolar_loss(f_est: FundamentalMatrix, f_cal: FundamentalMatrix) -> float:
    """Sum of elementwise |F_est − F_cal| between canonicalized matrices."""
    return float(np.abs(f_est.matrix - f_cal.matrix).sum())


def epipolar_value_and_grad(
    params: np.ndarray, intrinsics: Intrinsics, f_est: np.ndarray
) -> Tuple[float, np.ndarray, bool]:
    """L_g and its gradient w.r.t. the 6 pose parameters (ω, t).

    F_est is a constant. Returns (value, grad, degenerate); a near-zero
    translation yields (0, 0, True).
    """
    params = np.asarray(params, dtype=np.float64)
    omega, translation = params[:3], params[3:]
    if np.linalg.norm(translation) < RansacDefaults.MIN_TRANSLATION.value:
        logger.warning("epipolar term skipped: translation below 1e-6")
        return 0.0, np.zeros(6), True

    k_inv = intrinsics.inverse
    rotation = exp_so3(omega)
    t_hat = skew(translation)
    raw = k_inv.T @ t_hat @ rotation @ k_inv
    norm = np.linalg.norm(raw)
    sign = 1.0 if raw.flat[np.argmax(np.abs(raw))] >= 0 else -1.0
    f_cal = sign * raw / norm
    residual = f_cal - f_est
    value = float(np.abs(residual).sum())
    upstream = np.sign(residual)

    d_rot = rotation_derivatives(omega)
    basis = np.eye(3)
    grad = np.zeros(6)
    for j in range(6):
        if j < 3:
            d_raw = k_inv.T @ t_hat @ d_rot[j] @ k_inv
        else:
            d_raw = k_inv.T @ skew(basis[j - 3]) @ rotation @ k_inv
        d_cal = sign * (d_raw - raw * np.sum(raw * d_raw) / norm**2) / norm
        grad[j] = np.sum(upstream * d_cal)
    return value, grad, False


def epipolar_structure(params: np.ndarray, intrinsics: Intrinsics, f_est: np.ndarray) -> np.ndarray:
    """Signs of F_cal − F_est and the sign-fixing entry, for kink detection."""
    params = np.asarray(params, dtype=np.float64)
    raw = intrinsics.inverse.T @ skew(params[3:]) @ exp_so3(params[:3]) @ intrinsics.inverse
    index = int(np.argmax(np.abs(raw)))
    sign = 1.0 if raw.flat[index] >= 0 else -1.0
    f_cal = sign * raw / np.linalg.norm(raw)
    return np.concatenate([np.sign(f_cal - f_est).ravel(), [index, sign]])
