"""Skew matrices and derivatives of the axis-angle exponential map."""

import numpy as np
from scipy.spatial.transform import Rotation

SMALL_ANGLE = 1e-12


def skew(w: np.ndarray) -> np.ndarray:
    """[w]x such that [w]x v = w x v."""
    wx, wy, wz = np.asarray(w, dtype=np.float64).reshape(3)
    return np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])


def exp_so3(omega: np.ndarray) -> np.ndarray:
    return Rotation.from_rotvec(np.asarray(omega, dtype=np.float64)).as_matrix()


def rotation_derivatives(omega: np.ndarray) -> np.ndarray:
    """∂R/∂ω_k for k = 0, 1, 2, stacked as a (3, 3, 3) array.

    Closed form for R = exp([ω]x); at ω = 0 this is [e_k]x.
    """
    omega = np.asarray(omega, dtype=np.float64).reshape(3)
    theta2 = float(omega @ omega)
    basis = np.eye(3)
    if theta2 < SMALL_ANGLE:
        return np.stack([skew(basis[k]) for k in range(3)])
    rotation = exp_so3(omega)
    omega_hat = skew(omega)
    i_minus_r = np.eye(3) - rotation
    out = []
    for k in range(3):
        inner = omega[k] * omega_hat + skew(np.cross(omega, i_minus_r @ basis[k]))
        out.append(inner / theta2 @ rotation)
    return np.stack(out)
