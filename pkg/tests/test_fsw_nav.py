import numpy as np
import pytest

from upstage.frames import SensorFrame
from upstage.fsw.navigation import NavState, navigate

DT = 0.1
CUTOFF = 2.0
TAU = 1.0 / (2.0 * np.pi * CUTOFF)


def frame(tick, w, q=None):
    return SensorFrame(tick=tick, t=tick * DT, w_meas=np.asarray(w, dtype=float),
                       q_meas=np.asarray(q if q is not None else [1, 0, 0, 0], dtype=float),
                       p_tank=2e6, m_prop_meas=600.0)


def test_constant_input_converges_within_five_time_constants():
    nav = NavState()
    target = np.array([0.02, -0.01, 0.05])
    nav = navigate(frame(0, [0, 0, 0]), nav, DT, CUTOFF, 1.0)
    n_steps = int(np.ceil(5 * TAU / DT)) + 1
    for k in range(1, n_steps + 1):
        nav = navigate(frame(k, target), nav, DT, CUTOFF, 1.0)
    assert np.all(np.abs(nav.w_hat - target) <= 0.01 * np.abs(target) + 1e-12)


def test_zero_input_stays_zero():
    nav = NavState()
    for k in range(50):
        nav = navigate(frame(k, [0, 0, 0]), nav, DT, CUTOFF, 1.0)
    assert np.allclose(nav.w_hat, 0.0)
    assert np.allclose(nav.w_dot_hat, 0.0)


def test_single_frame_spike_bounded_by_filter_gain():
    nav = NavState()
    for k in range(10):
        nav = navigate(frame(k, [0, 0, 0]), nav, DT, CUTOFF, 1.0)
    h = 0.5
    nav = navigate(frame(10, [h, 0, 0]), nav, DT, CUTOFF, 1.0)
    alpha = 1.0 - np.exp(-DT / TAU)
    assert nav.w_hat[0] == pytest.approx(alpha * h)
    assert nav.w_hat[0] <= alpha * h + 1e-12


def test_tick_gap_flagged_and_estimate_held():
    nav = NavState()
    nav = navigate(frame(0, [0.01, 0, 0]), nav, DT, CUTOFF, 1.0)
    nav = navigate(frame(1, [0.01, 0, 0]), nav, DT, CUTOFF, 1.0)
    assert not nav.tick_gap
    nav = navigate(frame(5, [0.01, 0, 0]), nav, DT, CUTOFF, 1.0)
    assert nav.tick_gap


def test_quaternion_normalized():
    nav = NavState()
    nav = navigate(frame(0, [0, 0, 0], q=[2.0, 0, 0, 0]), nav, DT, CUTOFF, 1.0)
    assert np.linalg.norm(nav.q_hat) == pytest.approx(1.0)
