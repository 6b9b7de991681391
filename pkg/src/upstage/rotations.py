"""Quaternion and rotation helpers.

Convention used throughout the package: scalar-first unit quaternion
``q = (q0, q1, q2, q3)`` rotating body-frame vectors into the inertial
frame, i.e. ``v_inertial = R(q) @ v_body``.  Kinematics for a body rate
``w`` expressed in the body frame: ``q_dot = 0.5 * q ⊗ (0, w)``.
"""

from __future__ import annotations

import numpy as np

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a ⊗ b, both scalar-first."""
    a0, a1, a2, a3 = a
    b0, b1, b2, b3 = b
    return np.array([
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    ])


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    return q / np.linalg.norm(q)


def quat_derivative(q: np.ndarray, w: np.ndarray) -> np.ndarray:
    """q_dot = 0.5 * q ⊗ (0, w) with w the body rate."""
    return 0.5 * quat_multiply(q, np.array([0.0, w[0], w[1], w[2]]))


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix mapping body vectors to inertial vectors."""
    q0, q1, q2, q3 = q
    return np.array([
        [1 - 2 * (q2 * q2 + q3 * q3), 2 * (q1 * q2 - q0 * q3), 2 * (q1 * q3 + q0 * q2)],
        [2 * (q1 * q2 + q0 * q3), 1 - 2 * (q1 * q1 + q3 * q3), 2 * (q2 * q3 - q0 * q1)],
        [2 * (q1 * q3 - q0 * q2), 2 * (q2 * q3 + q0 * q1), 1 - 2 * (q1 * q1 + q2 * q2)],
    ])


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis))


def attitude_error_vector(q_ref: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Small-angle attitude error: 2 * vec(q_ref^-1 ⊗ q), sign-corrected.

    The sign correction keeps the error continuous across the quaternion
    double cover (q and -q describe the same attitude).
    """
    dq = quat_multiply(quat_conjugate(q_ref), q)
    if dq[0] < 0.0:
        dq = -dq
    return 2.0 * dq[1:]


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(v) @ u == np.cross(v, u)."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def wrap_angle(phi: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = np.remainder(phi, 2.0 * np.pi)
    if wrapped > np.pi:
        wrapped -= 2.0 * np.pi
    return float(wrapped)
