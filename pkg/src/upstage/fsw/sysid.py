"""Recursive inertia identification and the principal-axis transform.

The rigid-body equation J w_dot + w x (J w) = tau is linear in the six
independent inertia components theta = (Jxx, Jyy, Jzz, Jxy, Jxz, Jyz),
so each rate/torque sample gives three rows of a linear regression that
standard recursive least squares with a forgetting factor solves online.
The estimated tensor feeds an eigendecomposition whose rotation carries
the control problem into the principal frame, where a spinning stage
with a propellant bulge is diagonal again.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COND_LIMIT = 1e12


@dataclass
class InertiaEstimate:
    theta: np.ndarray                    # (Jxx, Jyy, Jzz, Jxy, Jxz, Jyz)
    covariance: np.ndarray               # 6x6 SPD
    lam: float = 1.0                     # forgetting factor
    p0: float = 1.0e6                    # reset scale for covariance blowup
    reset_count: int = 0

    @classmethod
    def from_theta0(cls, theta0: np.ndarray, p0: float = 1.0e6,
                    lam: float = 1.0) -> "InertiaEstimate":
        return cls(theta=np.asarray(theta0, dtype=float).copy(),
                   covariance=p0 * np.eye(6), lam=lam, p0=p0)

    def copy(self) -> "InertiaEstimate":
        return InertiaEstimate(theta=self.theta.copy(),
                               covariance=self.covariance.copy(),
                               lam=self.lam, p0=self.p0,
                               reset_count=self.reset_count)


def assemble_inertia(theta: np.ndarray) -> np.ndarray:
    jxx, jyy, jzz, jxy, jxz, jyz = theta
    return np.array([[jxx, jxy, jxz],
                     [jxy, jyy, jyz],
                     [jxz, jyz, jzz]])


def inertia_to_theta(j: np.ndarray) -> np.ndarray:
    return np.array([j[0, 0], j[1, 1], j[2, 2], j[0, 1], j[0, 2], j[1, 2]])


def _linear_map(a: np.ndarray) -> np.ndarray:
    """L(a) such that J(theta) @ a == L(a) @ theta."""
    ax, ay, az = a
    return np.array([[ax, 0.0, 0.0, ay, az, 0.0],
                     [0.0, ay, 0.0, ax, 0.0, az],
                     [0.0, 0.0, az, 0.0, ax, ay]])


def regressor(w: np.ndarray, w_dot: np.ndarray) -> np.ndarray:
    """3x6 regressor Phi with Phi @ theta == J w_dot + w x (J w)."""
    lw = _linear_map(w)
    cross = np.array([[0.0, -w[2], w[1]],
                      [w[2], 0.0, -w[0]],
                      [-w[1], w[0], 0.0]])
    return _linear_map(w_dot) + cross @ lw


def rls_update(est: InertiaEstimate, w_hat: np.ndarray, w_dot_hat: np.ndarray,
               tau_applied: np.ndarray) -> InertiaEstimate:
    """One RLS step on the Euler-equation regression.

    Zero excitation leaves the estimate untouched (including the
    covariance, to avoid forgetting-factor windup while quiescent).  A
    covariance condition number beyond 1e12 resets P to its initial scale
    and bumps reset_count so the caller can raise a flag.
    """
    phi = regressor(w_hat, w_dot_hat)
    new = est.copy()
    if float(np.abs(phi).sum()) < 1e-12:
        return new

    lam = est.lam
    p = est.covariance
    s = lam * np.eye(3) + phi @ p @ phi.T
    gain = p @ phi.T @ np.linalg.inv(s)
    residual = np.asarray(tau_applied, dtype=float) - phi @ est.theta
    new.theta = est.theta + gain @ residual
    p_new = (p - gain @ phi @ p) / lam
    new.covariance = 0.5 * (p_new + p_new.T)

    eigs = np.linalg.eigvalsh(new.covariance)
    if eigs[0] <= 0.0 or eigs[-1] / max(eigs[0], 1e-300) > COND_LIMIT:
        new.covariance = est.p0 * np.eye(6)
        new.reset_count += 1
    return new


def principal_axes(j: np.ndarray) -> tuple:
    """Eigendecomposition of a symmetric inertia tensor.

    Returns (r_p, j_p) with eigenvalues ascending on the diagonal of j_p
    and r_p a proper rotation (det +1; the last column is flipped when the
    raw eigenbasis is left-handed).  Columns of r_p are the principal axes
    expressed in the body frame.
    """
    j = np.asarray(j, dtype=float)
    eigvals, eigvecs = np.linalg.eigh(0.5 * (j + j.T))
    if np.linalg.det(eigvecs) < 0.0:
        eigvecs = eigvecs.copy()
        eigvecs[:, 2] = -eigvecs[:, 2]
    return eigvecs, np.diag(eigvals)


def spin_axis_column(r_p: np.ndarray, axis_body: np.ndarray) -> np.ndarray:
    """Principal axis closest to a nominal body spin axis, sign-aligned."""
    dots = r_p.T @ axis_body
    col = int(np.argmax(np.abs(dots)))
    vec = r_p[:, col].copy()
    if dots[col] < 0.0:
        vec = -vec
    return vec
