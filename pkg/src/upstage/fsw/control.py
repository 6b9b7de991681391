"""Baseline phase-plane controller and the thruster allocation table."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import Scenario


@dataclass
class PhasePlaneGains:
    k_rate: float               # rate weight in the switching function
    k_ontime: float             # on-time per unit of switching function
    deadband_outer: float
    deadband_inner: float


@dataclass
class PhasePlaneState:
    firing: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=bool))


def phase_plane_control(att_err: np.ndarray, rate_err: np.ndarray,
                        state: PhasePlaneState, gains: PhasePlaneGains,
                        mib: float, t_max: float) -> list:
    """Per-axis Schmitt-trigger pulse logic.

    The switching function s = att_err + k_rate * rate_err starts a firing
    episode when |s| leaves the outer deadband and ends it when |s| falls
    inside the inner one; while firing, the pulse opposes sign(s) with
    on-time clamp(|s| * k_ontime, MIB, t_max).  Returns per-axis
    (sign, on_time) with sign 0 when silent.
    """
    out = []
    for i in range(3):
        s = float(att_err[i] + gains.k_rate * rate_err[i])
        mag = abs(s)
        if state.firing[i]:
            if mag < gains.deadband_inner:
                state.firing[i] = False
        elif mag > gains.deadband_outer:
            state.firing[i] = True
        if state.firing[i] and mag > 0.0:
            on = min(max(mag * gains.k_ontime, mib), t_max)
            out.append((-int(np.sign(s)), on))
        else:
            out.append((0, 0.0))
    return out


def quantize_command(on_time: float, mib: float, t_max: float) -> float:
    """Enforce the MIB contract: emitted on-times are 0 or in [MIB, t_max].

    Sub-MIB demands round to the nearer of {0, MIB} so small impulse
    requests neither vanish entirely nor violate the valve physics.
    """
    if on_time <= 0.0:
        return 0.0
    if on_time < mib:
        return 0.0 if on_time < 0.5 * mib else mib
    return min(on_time, t_max)


@dataclass
class AxisAuthority:
    thruster_index: int
    torque_arm: float           # N*m of axis torque per N of thrust


class Allocator:
    """Maps per-axis torque demands onto individual bank thrusters.

    Built once from the scenario geometry: for each body axis and sign the
    best-aligned thruster is selected by its unit-thrust torque r x d.
    """

    def __init__(self, scenario: Scenario, alignment_min: float = 0.7):
        self.n = len(scenario.thrusters)
        self.mib = max(t.mib for t in scenario.thrusters) if self.n else 0.0
        self.table = {}
        self._f_ref = np.array([t.f_ref for t in scenario.thrusters])
        self._p_ref = np.array([t.p_ref for t in scenario.thrusters])
        for axis in range(3):
            for sign in (1, -1):
                best = None
                for k, th in enumerate(scenario.thrusters):
                    tau_u = np.cross(th.position, th.direction)
                    norm = np.linalg.norm(tau_u)
                    if norm < 1e-12:
                        continue
                    comp = sign * tau_u[axis]
                    if comp / norm >= alignment_min and (best is None or comp > best[1]):
                        best = (k, comp)
                if best is not None:
                    self.table[(axis, sign)] = AxisAuthority(best[0], best[1])

    def authority(self, axis: int, p_tank: float) -> float:
        """Torque (N*m) of a full-on pulse about a body axis at pressure p."""
        entries = [self.table.get((axis, s)) for s in (1, -1)]
        entries = [e for e in entries if e is not None]
        if not entries:
            return 0.0
        arms = [e.torque_arm * self._f_ref[e.thruster_index]
                * p_tank / self._p_ref[e.thruster_index] for e in entries]
        return float(min(arms))

    def axis_on_times(self, demands: list, p_tank: float, mib: float,
                      t_max: float) -> np.ndarray:
        """Per-thruster on-times from per-axis (sign, on_time) demands."""
        on = np.zeros(self.n)
        for axis, (sign, on_time) in enumerate(demands):
            if sign == 0 or on_time <= 0.0:
                continue
            entry = self.table.get((axis, sign))
            if entry is None:
                continue
            on[entry.thruster_index] += quantize_command(on_time, mib, t_max)
        return np.minimum(on, t_max)

    def impulse_on_times(self, impulse_body: np.ndarray, p_tank: float,
                         mib: float, t_max: float) -> np.ndarray:
        """Per-thruster on-times delivering a body angular-impulse vector."""
        on = np.zeros(self.n)
        for axis in range(3):
            h = float(impulse_body[axis])
            if h == 0.0:
                continue
            sign = 1 if h > 0 else -1
            entry = self.table.get((axis, sign))
            if entry is None:
                continue
            torque = entry.torque_arm * self._f_ref[entry.thruster_index] \
                * p_tank / self._p_ref[entry.thruster_index]
            if torque <= 0.0:
                continue
            on[entry.thruster_index] += quantize_command(abs(h) / torque, mib, t_max)
        return np.minimum(on, t_max)

    def commanded_torque(self, on_times: np.ndarray, p_tank: float,
                         scenario: Scenario, period: float) -> np.ndarray:
        """Average body torque over one FSW period implied by on-times."""
        tau = np.zeros(3)
        for k, th in enumerate(scenario.thrusters):
            if on_times[k] <= 0.0:
                continue
            thrust = th.f_ref * p_tank / th.p_ref
            tau += np.cross(th.position, th.direction) * thrust * on_times[k]
        return tau / period
