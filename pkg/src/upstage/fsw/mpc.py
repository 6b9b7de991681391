"""Pulse-minimizing rate MPC for on-off thrusters with a minimum impulse bit.

Per axis, the decision over an N-step horizon is an on-time per step,
semi-continuous in {0} u [MIB, T], with a free firing direction.  The
rate follows w_{k+1} = w_k + (L/J) u_k s_k; the cost charges each
nonzero pulse plus a quadratic terminal rate error.  Because the model
is a single integrator in rate, the cost depends only on the pulse count
m and the signed on-time sum S, so the branch-and-bound over on/off
patterns collapses to pulse-count levels with the active-set on-times
solved in closed form; the bound w_count * m prunes whole levels.  Ties
break toward fewer pulses, then earlier pulses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_MAX = 8


@dataclass
class AxisPlan:
    on_times: np.ndarray     # s, length N, zero where silent
    signs: np.ndarray        # +-1 per step (0 where silent)
    cost: float
    pulses: int
    infeasible: bool = False

    @property
    def first_impulse(self) -> float:
        """Signed on-time of the first step (what a receding horizon applies)."""
        return float(self.on_times[0] * self.signs[0])


def _level_best(delta_w: float, j_axis: float, authority: float, mib: float,
                t_max: float, m: int, w_count: float, w_term: float):
    """Best cost at pulse count m; on-times solved in closed form.

    The reachable signed sum with j positive pulses is
    [j*mib - (m-j)*t_max, j*t_max - (m-j)*mib]; the target sum is clamped
    into each interval and the best j kept.
    """
    gain = authority / j_axis
    if m == 0:
        r = delta_w
        return w_count * 0.0 + w_term * r * r, 0, 0.0
    target = -delta_w / gain
    best = None
    for j in range(m + 1):
        lo = j * mib - (m - j) * t_max
        hi = j * t_max - (m - j) * mib
        s = min(max(target, lo), hi)
        r = delta_w + gain * s
        cost = w_count * m + w_term * r * r
        if best is None or cost < best[0]:
            best = (cost, j, s)
    return best


def _realize(m: int, j_pos: int, s_sum: float, mib: float, t_max: float,
             n: int) -> tuple:
    """Concrete on-times/signs for (m, j, S): positives occupy the earliest
    slots, extra on-time beyond MIB is piled onto the earliest pulses."""
    on = np.zeros(n)
    signs = np.zeros(n)
    if m == 0:
        return on, signs
    mags = [mib] * m
    sgn = [1.0] * j_pos + [-1.0] * (m - j_pos)
    remainder = s_sum - sum(mg * sg for mg, sg in zip(mags, sgn))
    for i in range(m):
        if abs(remainder) < 1e-15:
            break
        if (remainder > 0 and sgn[i] > 0) or (remainder < 0 and sgn[i] < 0):
            room = t_max - mags[i]
            add = min(room, abs(remainder))
            mags[i] += add
            remainder -= np.sign(remainder) * add
    for i in range(m):
        on[i] = mags[i]
        signs[i] = sgn[i]
    return on, signs


def plan_axis(delta_w: float, j_axis: float, authority: float, mib: float,
              t_max: float, horizon: int, w_count: float, w_term: float,
              terminal_box: float) -> AxisPlan:
    """Exact minimizer over on/off patterns for one axis.

    delta_w is the current rate error (w - w_ref); authority the torque of
    a full-on pulse.  Sets infeasible when even saturated pulses leave the
    terminal rate outside the configured box (best effort still returned).
    """
    if not 1 <= horizon <= N_MAX:
        raise ValueError(f"horizon {horizon} outside 1..{N_MAX}")
    if j_axis <= 0.0 or authority <= 0.0:
        raise ValueError("j_axis and authority must be positive")

    best = None
    for m in range(horizon + 1):
        if best is not None and w_count * m >= best[0]:
            break  # every deeper level costs at least w_count * m
        cost, j_pos, s_sum = _level_best(delta_w, j_axis, authority, mib,
                                         t_max, m, w_count, w_term)
        if best is None or cost < best[0]:
            best = (cost, m, j_pos, s_sum)

    cost, m, j_pos, s_sum = best
    on, signs = _realize(m, j_pos, s_sum, mib, t_max, horizon)
    gain = authority / j_axis
    terminal = delta_w + gain * s_sum
    return AxisPlan(on_times=on, signs=signs, cost=cost, pulses=m,
                    infeasible=abs(terminal) > terminal_box)


def plan_rates(rate_errors: np.ndarray, j_axes: np.ndarray,
               authorities: np.ndarray, mib: float, t_max: float,
               horizon: int, w_count: float, w_term: float,
               terminal_box: float) -> list:
    """Independent per-axis plans (the axes are decoupled by construction)."""
    return [plan_axis(float(rate_errors[i]), float(j_axes[i]),
                      float(authorities[i]), mib, t_max, horizon,
                      w_count, w_term, terminal_box)
            for i in range(len(rate_errors))]
