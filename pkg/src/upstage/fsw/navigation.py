"""Sensor processing: rate filtering and derivative estimation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..frames import SensorFrame
from ..rotations import quat_normalize


@dataclass
class NavState:
    w_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))
    w_dot_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q_hat: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    last_tick: int = -1
    initialized: bool = False
    tick_gap: bool = False


def navigate(frame: SensorFrame, nav: NavState, dt: float,
             cutoff_hz: float, deriv_cutoff_hz: float) -> NavState:
    """First-order low-pass on the gyro, filtered backward difference for
    the rate derivative.  A missing tick holds the last estimate and flags.
    """
    nav.tick_gap = nav.initialized and frame.tick != nav.last_tick + 1
    nav.last_tick = frame.tick
    nav.q_hat = quat_normalize(frame.q_meas)

    if not nav.initialized:
        nav.initialized = True
        nav.w_hat = frame.w_meas.copy()
        nav.w_dot_hat = np.zeros(3)
        return nav

    alpha = 1.0 - np.exp(-2.0 * np.pi * cutoff_hz * dt)
    w_prev = nav.w_hat
    nav.w_hat = w_prev + alpha * (frame.w_meas - w_prev)

    raw_deriv = (nav.w_hat - w_prev) / dt
    beta = 1.0 - np.exp(-2.0 * np.pi * deriv_cutoff_hz * dt)
    nav.w_dot_hat = nav.w_dot_hat + beta * (raw_deriv - nav.w_dot_hat)
    return nav
