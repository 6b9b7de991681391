"""Flight software stack: navigation, sequencing, control, identification.

The whole stack advances only on sensor-frame receipt and is a pure
function of (frame history, configuration), which is what makes the
in-process and over-link executions identical.  Controller modes:

* ``phase_plane`` - per-body-axis Schmitt-trigger pulses (baseline).
* ``mpc``         - pulse-count-optimal rate MPC on body axes with the
                    configured rigid inertia.
* ``adaptive``    - recursive inertia identification feeding the
                    principal-axis transform; the MPC plans in the
                    principal frame and, once the estimate has settled,
                    the spin reference is re-pointed along the true
                    principal axis so holding the spin stops costing
                    propellant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import Scenario
from ..frames import (CONTROLLER_MODE_INDEX, FLAG_MIB_QUANTIZED, ActuatorFrame,
                      SensorFrame, sep_command_bits, unpack_chain_phase)
from ..sequencer import (InterpState, SequenceProgram, SequenceVocabulary,
                         force_goto, step_sequencer)
from ..telemetry import fsw_signal_names
from .control import (Allocator, PhasePlaneGains, PhasePlaneState,
                      phase_plane_control, quantize_command)
from .mpc import plan_rates
from .navigation import NavState, navigate
from .sysid import (InertiaEstimate, assemble_inertia, inertia_to_theta,
                    principal_axes, rls_update, spin_axis_column)

FSW_FLAG_INFEASIBLE = 1 << 0
FSW_FLAG_COV_RESET = 1 << 1
FSW_FLAG_TICK_GAP = 1 << 2


def vocabulary(scenario: Scenario) -> SequenceVocabulary:
    return SequenceVocabulary(
        signals=frozenset(fsw_signal_names(scenario.separation_ids())),
        devices=frozenset(scenario.separation_ids()))


@dataclass
class FswStatus:
    """Snapshot of FSW-internal state for telemetry and tests."""
    mode: str
    w_ref: np.ndarray
    w_ref_effective: np.ndarray
    rate_err_mag: float
    seq_state: str
    theta: np.ndarray
    retargeted: bool
    flags: int


class FlightSoftware:
    """Frame-synchronous GNC stack; one ActuatorFrame per SensorFrame."""

    def __init__(self, scenario: Scenario, program: SequenceProgram | None = None,
                 link_delay: int = 0):
        cfg = scenario.fsw
        self.scenario = scenario
        self.cfg = cfg
        self.period = cfg.period
        self.program = program
        self.link_delay = int(link_delay)

        self.allocator = Allocator(scenario)
        self.gains = PhasePlaneGains(k_rate=cfg.pp_k_rate, k_ontime=cfg.pp_k_ontime,
                                     deadband_outer=cfg.pp_deadband_outer,
                                     deadband_inner=cfg.pp_deadband_inner)
        self.mib = max((t.mib for t in scenario.thrusters), default=0.01)

        theta0 = cfg.rls_theta0
        if not np.any(theta0):
            # launch mass properties: dry stage plus every attached payload
            j0 = scenario.vehicle.j_dry.copy()
            for sep in scenario.separations:
                j0 = j0 + sep.j_pl
            theta0 = inertia_to_theta(j0)
        self.j0 = assemble_inertia(theta0)
        self.estimate = InertiaEstimate.from_theta0(theta0, p0=cfg.rls_p0,
                                                    lam=cfg.rls_lambda)

        self.nav = NavState()
        self.pp_state = PhasePlaneState()
        self.interp = InterpState()
        self.mode = cfg.controller
        self.w_ref = np.zeros(3)
        self.t_mode_entry = 0.0
        self.retargeted = False
        self.flags_set = set()
        self._cmd_torques: list = []
        self._sep_index = {sid: i for i, sid in enumerate(scenario.separation_ids())}
        self.pulse_count = 0
        self.last_frame_flags = 0

    # -- telemetry snapshot the sequencer conditions evaluate on ---------

    def _snapshot(self, frame: SensorFrame, w_ref_eff: np.ndarray) -> dict:
        w = self.nav.w_hat
        err = w - w_ref_eff
        spin_dir = self._spin_direction()
        snap = {
            "t": frame.t,
            "t_in_mode": frame.t - self.t_mode_entry,
            "wx": float(w[0]), "wy": float(w[1]), "wz": float(w[2]),
            "w_mag": float(np.linalg.norm(w)),
            "w_spin": float(w @ spin_dir),
            "rate_err_mag": float(np.linalg.norm(err)),
            "m_prop": frame.m_prop_meas,
            "p_tank": frame.p_tank,
            "mib_flag": float(bool(frame.discretes & FLAG_MIB_QUANTIZED)),
        }
        for sid, idx in self._sep_index.items():
            snap[f"sep_{sid}_phase"] = float(unpack_chain_phase(frame.discretes, idx))
        return snap

    def _spin_direction(self) -> np.ndarray:
        norm = np.linalg.norm(self.w_ref)
        if norm < 1e-12:
            return np.array([0.0, 0.0, 1.0])
        return self.w_ref / norm

    def _apply_actions(self, actions: list, t: float) -> int:
        sep_word = 0
        for act in actions:
            if act.kind == "set_rate_target":
                self.w_ref = np.array(act.args)
                self.retargeted = False
            elif act.kind == "set_controller":
                if act.args[0] != self.mode:
                    self.mode = act.args[0]
                    self.t_mode_entry = t
                    self.retargeted = False
            elif act.kind == "arm":
                sep_word |= sep_command_bits(self._sep_index[act.args[0]], arm=True)
            elif act.kind == "fire":
                sep_word |= sep_command_bits(self._sep_index[act.args[0]], fire=True)
            elif act.kind == "set_flag":
                self.flags_set.add(act.args[0])
        return sep_word

    # -- controller dispatch ---------------------------------------------

    def _reference(self, j_hat: np.ndarray) -> np.ndarray:
        """Effective rate reference; adaptive mode re-points the spin onto
        the estimated principal axis once the estimate has settled."""
        if self.mode != "adaptive" or not self.retargeted:
            return self.w_ref
        r_p, j_p = principal_axes(j_hat)
        if np.diag(j_p)[0] <= 1e-6 * np.trace(self.j0):
            return self.w_ref
        spin_mag = float(np.linalg.norm(self.w_ref))
        if spin_mag < 1e-12:
            return self.w_ref
        return spin_mag * spin_axis_column(r_p, self._spin_direction())

    def _control(self, err: np.ndarray, p_tank: float, j_hat: np.ndarray) -> tuple:
        """Returns (on_times per thruster, infeasible flag)."""
        t_max = self.period
        infeasible = False
        if self.mode == "phase_plane":
            demands = phase_plane_control(np.zeros(3), err, self.pp_state,
                                          self.gains, self.mib, t_max)
            on = self.allocator.axis_on_times(demands, p_tank, self.mib, t_max)
            return on, infeasible

        # axes the bank has no torque authority about are left unplanned
        authorities = np.array([self.allocator.authority(a, p_tank) for a in range(3)])
        usable = authorities > 0.0
        cfg = self.cfg
        if self.mode == "mpc":
            j_axes = np.diag(self.j0)
            impulse = np.zeros(3)
            for i in range(3):
                if not usable[i]:
                    continue
                plan = plan_rates(err[i:i + 1], j_axes[i:i + 1],
                                  authorities[i:i + 1], self.mib, t_max,
                                  cfg.mpc_horizon, cfg.mpc_weight_count,
                                  cfg.mpc_weight_terminal,
                                  cfg.mpc_terminal_box)[0]
                impulse[i] = plan.first_impulse * authorities[i]
                infeasible = infeasible or plan.infeasible
            on = self.allocator.impulse_on_times(impulse, p_tank, self.mib, t_max)
            return on, infeasible

        # adaptive: plan in the principal frame of the estimated inertia;
        # an estimate that is not credibly SPD (transients, garbage data)
        # falls back to the launch inertia rather than crashing the planner
        r_p, j_p = principal_axes(j_hat)
        if np.diag(j_p)[0] <= 1e-6 * np.trace(self.j0):
            r_p, j_p = principal_axes(self.j0)
        err_p = r_p.T @ err
        auth_p = np.array([float(r_p[:, k] ** 2 @ authorities) for k in range(3)])
        auth_p = np.maximum(auth_p, 1e-9)
        plans = plan_rates(err_p, np.diag(j_p), auth_p, self.mib, t_max,
                           cfg.mpc_horizon, cfg.mpc_weight_count,
                           cfg.mpc_weight_terminal, cfg.mpc_terminal_box)
        impulse_p = np.array([p.first_impulse * auth_p[i]
                              for i, p in enumerate(plans)])
        infeasible = any(p.infeasible for p in plans)
        impulse_b = r_p @ impulse_p
        on = self.allocator.impulse_on_times(impulse_b, p_tank, self.mib, t_max)
        return on, infeasible

    # -- main entry point --------------------------------------------------

    def step(self, frame: SensorFrame) -> ActuatorFrame:
        cfg = self.cfg
        self.nav = navigate(frame, self.nav, self.period,
                            cfg.nav_cutoff_hz, cfg.nav_deriv_cutoff_hz)
        flags = FSW_FLAG_TICK_GAP if self.nav.tick_gap else 0

        j_hat = assemble_inertia(self.estimate.theta) if self.mode == "adaptive" \
            else self.j0

        # sequencer first: its actions take effect this tick
        sep_word = 0
        if self.program is not None:
            snapshot = self._snapshot(frame, self._reference(j_hat))
            actions = step_sequencer(self.program, self.interp, snapshot,
                                     frame.t, self.period)
            sep_word = self._apply_actions(actions, frame.t)

        # identification on the torque we ourselves commanded (certainty
        # equivalence), aligned with the link pipeline delay: the oldest
        # buffered command is the one applied during the last interval
        if self.mode == "adaptive":
            full = len(self._cmd_torques) == self.link_delay + 1
            tau_applied = self._cmd_torques[0] if full else np.zeros(3)
            before = self.estimate.reset_count
            self.estimate = rls_update(self.estimate, self.nav.w_hat,
                                       self.nav.w_dot_hat, tau_applied)
            if self.estimate.reset_count != before:
                flags |= FSW_FLAG_COV_RESET
            j_hat = assemble_inertia(self.estimate.theta)
            if not self.retargeted and \
                    frame.t - self.t_mode_entry >= cfg.adaptive_retarget_after:
                self.retargeted = True

        w_ref_eff = self._reference(j_hat)
        err = self.nav.w_hat - w_ref_eff
        on_times, infeasible = self._control(err, frame.p_tank, j_hat)
        if infeasible:
            flags |= FSW_FLAG_INFEASIBLE

        # MIB contract: emitted on-times are 0 or within [MIB, period]
        on_times = np.array([quantize_command(u, self.mib, self.period)
                             for u in on_times])
        self.pulse_count += int(np.count_nonzero(on_times))

        tau_cmd = self.allocator.commanded_torque(on_times, frame.p_tank,
                                                  self.scenario, self.period)
        self._cmd_torques.append(tau_cmd)
        if len(self._cmd_torques) > self.link_delay + 1:
            self._cmd_torques.pop(0)

        self.last_frame_flags = flags
        seq_idx = -1
        if self.program is not None and self.interp.current:
            seq_idx = self.program.state_names().index(self.interp.current)
        return ActuatorFrame(tick=frame.tick, on_times=on_times,
                             engine_throttle=0.0, sep_commands=sep_word,
                             flags=flags,
                             rate_err_mag=float(np.linalg.norm(err)),
                             seq_state_idx=seq_idx,
                             ctrl_mode_idx=CONTROLLER_MODE_INDEX[self.mode])

    def operator_goto(self, state_name: str) -> None:
        if self.program is None:
            raise ValueError("no sequence loaded")
        force_goto(self.program, self.interp, state_name)

    def operator_rate_target(self, w_ref: np.ndarray) -> None:
        self.w_ref = np.asarray(w_ref, dtype=float).copy()
        self.retargeted = False

    def status(self) -> FswStatus:
        j_hat = assemble_inertia(self.estimate.theta)
        w_ref_eff = self._reference(j_hat)
        return FswStatus(mode=self.mode, w_ref=self.w_ref.copy(),
                         w_ref_effective=w_ref_eff,
                         rate_err_mag=float(np.linalg.norm(self.nav.w_hat - w_ref_eff)),
                         seq_state=self.interp.current,
                         theta=self.estimate.theta.copy(),
                         retargeted=self.retargeted,
                         flags=self.last_frame_flags)
