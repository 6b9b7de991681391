"""Closed-loop execution: plant stepping against an FSW peer.

The loop is the same whether the flight software runs in this process or
behind the lockstep link: once per FSW period the plant emits a
SensorFrame, exchanges it with the peer, and applies the actuator frame
from D exchanges ago (the configured pipeline delay).  Between frames
the plant steps at its own finer rate with the latched pulse commands.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .actuation import PulseCommand, bank_forces_torques, build_bank, \
    main_engine_thrust, quantize_on_time
from .config import Scenario
from .frames import (CONTROLLER_MODE_NAMES, FLAG_LINK_TIMEOUT,
                     FLAG_MIB_QUANTIZED, ActuatorFrame, SensorFrame,
                     pack_chain_phases, unpack_sep_commands)
from .fsw import FlightSoftware
from .plant import (NumericalDivergence, VehicleState, apply_impulsive_event,
                    detach_payload, effective_inertia, make_initial_state,
                    nutation_half_cone, step_dynamics)
from .sequencer import SequenceProgram, parse_sequence
from .telemetry import TRACE_COLUMNS, EventLog, Trace, TraceWriter


class LinkTimeout(RuntimeError):
    pass


class ProtocolViolation(RuntimeError):
    pass


class Peer:
    """One lockstep exchange: SensorFrame in, ActuatorFrame out."""

    def exchange(self, frame: SensorFrame) -> ActuatorFrame:
        raise NotImplementedError

    def shutdown(self) -> None:
        pass


class InProcessPeer(Peer):
    def __init__(self, fsw: FlightSoftware):
        self.fsw = fsw

    def exchange(self, frame: SensorFrame) -> ActuatorFrame:
        reply = self.fsw.step(frame)
        if reply.tick != frame.tick:
            raise ProtocolViolation(f"tick echo {reply.tick} != {frame.tick}")
        return reply


def load_program(scenario: Scenario) -> SequenceProgram | None:
    if scenario.sequence_path is None:
        return None
    from .fsw import vocabulary
    from .sequencer import SequenceError
    path = Path(scenario.sequence_path)
    if not path.is_absolute():
        path = scenario.base_dir / path
    try:
        return parse_sequence(path.read_text(), vocabulary(scenario))
    except SequenceError as exc:
        exc.filename = str(path)   # diagnostics print as file:line:col
        raise


@dataclass
class RunResult:
    state: VehicleState
    trace: Trace
    events: EventLog
    pulse_count: int
    max_nutation: float
    steady_max_nutation: float
    fsw_ticks: int
    plant_ticks: int
    diverged: bool = False

    @property
    def ok(self) -> bool:
        return not self.diverged


@dataclass
class Hooks:
    """Optional callbacks for the service layer (console steering)."""
    pre_exchange: object = None   # called with (loop) before each FSW exchange
    on_row: object = None         # called with (row dict) per recorded row


class ClosedLoop:
    """Steps one scenario against a peer until the duration elapses."""

    def __init__(self, scenario: Scenario, peer: Peer, seed: int = 0,
                 out_dir: str | Path | None = None,
                 steady_window: float = 0.5, hooks: Hooks | None = None):
        self.scenario = scenario
        self.peer = peer
        self.seed = int(seed)
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.steady_window = steady_window
        self.hooks = hooks or Hooks()

        self.state = make_initial_state(scenario)
        self.bank = build_bank(scenario)
        from .separation import ChainState, SeparationDevice
        self.devices = [SeparationDevice.from_config(s) for s in scenario.separations]
        self.chains = {d.payload_id: ChainState() for d in self.devices}

        self.rng = np.random.default_rng(self.seed)
        r = scenario.fsw.gyro_bias_range
        self.gyro_bias = self.rng.uniform(-r, r, size=3)
        self.noise_sigma = scenario.fsw.gyro_noise_sigma

        self.delay = scenario.pil.delay_ticks
        self.n_sub = int(round(scenario.fsw.period / scenario.vehicle.dt))
        self.dt = scenario.vehicle.dt

        self.replies: list = []
        self.active_pulses: list = []
        self.pending_sep: dict = {}
        self.throttle = 0.0
        self.t_ignition: float | None = None
        self.pulse_count = 0
        self.flag_mib = False
        self.flag_timeout = False
        self.last_actuator = ActuatorFrame.zero(-1, len(self.bank))
        self.fsw_tick = 0
        self.plant_tick = 0

        self.program = load_program(scenario)
        self.seq_state_names = self.program.state_names() if self.program else []
        self._last_seq_idx = -1

        self.columns = TRACE_COLUMNS + [f"sep_{d.payload_id}_phase" for d in self.devices]
        self.mem = {c: [] for c in self.columns}
        self.writer = None
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            self.events = EventLog(self.out_dir / "events.jsonl")
            self.writer = TraceWriter(self.out_dir / "trace.csv", self.columns,
                                      decimation=1)
        else:
            self.events = EventLog(None)
        self._decimation = scenario.telemetry.decimation
        self._fault_logged = set()
        self.max_nutation = 0.0
        self.steady_max_nutation = 0.0
        self.duration = 0.0

    # -- frame plumbing ----------------------------------------------------

    def _sensor_frame(self) -> SensorFrame:
        noise = self.rng.normal(size=3) * self.noise_sigma
        w_meas = self.state.w + self.gyro_bias + noise
        discretes = pack_chain_phases(
            [self.chains[d.payload_id].phase for d in self.devices])
        if self.flag_mib:
            discretes |= FLAG_MIB_QUANTIZED
        if self.flag_timeout:
            discretes |= FLAG_LINK_TIMEOUT
        self.flag_mib = False
        self.flag_timeout = False
        return SensorFrame(tick=self.fsw_tick, t=self.state.t,
                           w_meas=w_meas, q_meas=self.state.q.copy(),
                           p_tank=self.state.tank.p,
                           m_prop_meas=self.state.m_prop,
                           discretes=discretes)

    def _exchange(self) -> None:
        if self.hooks.pre_exchange is not None:
            self.hooks.pre_exchange(self)
        frame = self._sensor_frame()
        try:
            reply = self.peer.exchange(frame)
        except LinkTimeout:
            if self.scenario.pil.on_timeout == "abort":
                raise
            held = self.replies[-1] if self.replies \
                else ActuatorFrame.zero(frame.tick, len(self.bank))
            reply = dataclasses.replace(held, tick=frame.tick)
            self.flag_timeout = True
            self.events.append(self.state.t, "flag", name="link_timeout")
        if reply.tick != frame.tick:
            raise ProtocolViolation(f"actuator tick {reply.tick} != {frame.tick}")
        # pipeline of depth delay+1: the oldest buffered reply is the one
        # answering tick k - delay
        self.replies.append(reply)
        if len(self.replies) > self.delay + 1:
            self.replies.pop(0)

        k = self.fsw_tick
        if k >= self.delay:
            applied = self.replies[0]
        else:
            applied = ActuatorFrame.zero(k, len(self.bank))
        self.last_actuator = applied
        self._apply_actuator(applied)
        self.fsw_tick += 1

    def _apply_actuator(self, applied: ActuatorFrame) -> None:
        t = self.state.t
        p_now = self.state.tank.p
        sample = p_now if self.scenario.tank.pressure_sampling == "pulse_start" else None
        self.active_pulses = []
        for i, th in enumerate(self.bank):
            t_on = float(applied.on_times[i])
            if t_on <= 0.0:
                continue
            t_on_q, flagged = quantize_on_time(t_on, th.mib)
            if flagged:
                self.flag_mib = True
                self.events.append(t, "flag", name="mib_quantized",
                                   thruster=th.id, commanded=t_on)
            self.active_pulses.append(PulseCommand(th.id, t_start=t,
                                                   t_on=t_on_q, p_sample=sample))
            self.pulse_count += 1
        self.pending_sep = {d.payload_id: unpack_sep_commands(applied.sep_commands, i)
                            for i, d in enumerate(self.devices)}
        if applied.engine_throttle > 0.0 and self.throttle == 0.0:
            self.t_ignition = t
        self.throttle = applied.engine_throttle
        if applied.flags:
            self.events.append(t, "flag", name="fsw_flags", bits=applied.flags)
        if applied.seq_state_idx != self._last_seq_idx and applied.seq_state_idx >= 0:
            self.events.append(t, "seq_transition",
                               state=self.seq_state_names[applied.seq_state_idx])
            self._last_seq_idx = applied.seq_state_idx

    # -- plant stepping ----------------------------------------------------

    def _plant_step(self) -> None:
        t = self.state.t
        for fault in self.scenario.faults:
            if fault.t_onset <= t and fault.thruster + fault.kind not in self._fault_logged:
                self._fault_logged.add(fault.thruster + fault.kind)
                self.events.append(t, "fault_onset", thruster=fault.thruster,
                                   fault=fault.kind)

        force, torque, mdot = bank_forces_torques(self.active_pulses, self.bank,
                                                  self.state.tank.p, t)
        if self.throttle > 0.0 and self.scenario.engine.f_max > 0.0:
            f_eng = main_engine_thrust(self.throttle, t - self.t_ignition,
                                       self.scenario.engine.f_max,
                                       self.scenario.engine.t_rampup)
            force = force + f_eng * self.scenario.engine.axis
            torque = torque + self.scenario.engine.misalignment_torque * \
                (f_eng / self.scenario.engine.f_max)

        from .separation import chain_step, release_impulse
        for dev in self.devices:
            if dev.payload_id not in self.state.attached:
                continue
            chain = self.chains[dev.payload_id]
            cmds = self.pending_sep.get(dev.payload_id, {})
            chain, event = chain_step(chain, dev, cmds, t)
            self.chains[dev.payload_id] = chain
            if chain.rejected_fire:
                self.events.append(t, "flag", name="fire_without_arm",
                                   device=dev.payload_id)
            if event is not None:
                self.state = detach_payload(self.state, dev.payload_id)
                dv, dw, v_rel = release_impulse(dev, self.state.m_total,
                                                effective_inertia(self.state))
                self.state = apply_impulsive_event(self.state, dv, dw)
                self.events.append(t, "release", payload=dev.payload_id,
                                   dv=dv, dw=dw, v_rel=v_rel)
        self.pending_sep = {}

        self.state = step_dynamics(self.state, torque, force, self.dt,
                                   mdot=mdot,
                                   rate_limit=self.scenario.vehicle.rate_limit)
        self._record_row(mdot)
        self.plant_tick += 1

    def _record_row(self, mdot: float) -> None:
        if (self.plant_tick % self._decimation) != 0:
            return
        s = self.state
        nut = nutation_half_cone(s)
        self.max_nutation = max(self.max_nutation, nut)
        if self.duration > 0.0 and s.t >= self.steady_window * self.duration:
            self.steady_max_nutation = max(self.steady_max_nutation, nut)
        act = self.last_actuator
        seq_name = self.seq_state_names[act.seq_state_idx] \
            if 0 <= act.seq_state_idx < len(self.seq_state_names) else "-"
        row = {
            "t": s.t, "tick": self.plant_tick, "fsw_tick": self.fsw_tick - 1,
            "q0": s.q[0], "q1": s.q[1], "q2": s.q[2], "q3": s.q[3],
            "wx": s.w[0], "wy": s.w[1], "wz": s.w[2],
            "w_mag": float(np.linalg.norm(s.w)),
            "nutation": nut, "m_prop": s.m_prop, "p_tank": s.tank.p,
            "t_tank": s.tank.temperature, "slosh_phi": s.slosh.phi,
            "slosh_m": s.slosh.m_s,
            "rate_err_mag": act.rate_err_mag,
            "pulse_count": self.pulse_count, "mdot": mdot,
            "seq_state": seq_name,
            "ctrl_mode": CONTROLLER_MODE_NAMES.get(act.ctrl_mode_idx, "-"),
            "flags": act.flags,
        }
        for i, d in enumerate(self.devices):
            row[f"sep_{d.payload_id}_phase"] = \
                {"IDLE": 0, "ARMED": 1, "FIRED": 2, "RELEASED": 3}[
                    self.chains[d.payload_id].phase]
        for c in self.columns:
            self.mem[c].append(row[c])
        if self.writer:
            self.writer.record(row)
        if self.hooks.on_row is not None:
            self.hooks.on_row(row)

    # -- top level ----------------------------------------------------------

    def run(self, duration: float) -> RunResult:
        self.duration = float(duration)
        n_plant = int(round(duration / self.dt))
        diverged = False
        try:
            for k in range(n_plant):
                if k % self.n_sub == 0:
                    self._exchange()
                self._plant_step()
        except NumericalDivergence as exc:
            diverged = True
            self.events.append(exc.t, "numerical_divergence", rate=exc.rate)
        finally:
            self.peer.shutdown()
            if self.writer:
                self.writer.close()
            self.events.close()
        trace = Trace(columns={
            c: (np.array(v) if c not in ("seq_state", "ctrl_mode")
                else np.array(v, dtype=object))
            for c, v in self.mem.items()})
        return RunResult(state=self.state, trace=trace, events=self.events,
                         pulse_count=self.pulse_count,
                         max_nutation=self.max_nutation,
                         steady_max_nutation=self.steady_max_nutation,
                         fsw_ticks=self.fsw_tick, plant_ticks=self.plant_tick,
                         diverged=diverged)


def run_scenario(scenario: Scenario, duration: float, seed: int = 0,
                 out_dir: str | Path | None = None) -> RunResult:
    """Closed loop with the flight software in-process."""
    program = load_program(scenario)
    fsw = FlightSoftware(scenario, program, link_delay=scenario.pil.delay_ticks)
    loop = ClosedLoop(scenario, InProcessPeer(fsw), seed=seed, out_dir=out_dir)
    return loop.run(duration)
