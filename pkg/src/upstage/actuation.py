"""Thruster bank with minimum-impulse-bit pulse shaping and fault injection.

Thrust scales linearly with tank pressure (blowdown feed), so actuator
authority degrades as the attitude history drives tank temperature and
pressure.  Pulses are trapezoids whose plateau spans exactly the commanded
on-time, which makes the delivered impulse F * t_on independent of the
ramp time.  Faults act at the physical level: a stuck-open valve thrusts
forever, a leak bleeds propellant and a small side force, a degraded
valve scales everything down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Scenario, ThrusterConfig

G0 = 9.80665  # m/s^2

FAULT_NONE = "none"
FAULT_STUCK_CLOSED = "stuck_closed"
FAULT_STUCK_OPEN = "stuck_open"
FAULT_LEAK = "leak"
FAULT_DEGRADED = "degraded"
FAULT_EXTRA_DELAY = "extra_delay"


class UnknownThrusterId(KeyError):
    pass


@dataclass
class FaultSpec:
    kind: str = FAULT_NONE
    t_onset: float = 0.0
    mdot: float = 0.0              # leak mass flow, kg/s
    thrust_fraction: float = 0.0   # leak side-thrust as a fraction of nominal
    eta: float = 1.0               # degraded efficiency, (0, 1]
    extra_delay: float = 0.0       # added valve delay, s

    def active(self, t: float) -> bool:
        return self.kind != FAULT_NONE and t >= self.t_onset


@dataclass
class Thruster:
    id: str
    position: np.ndarray           # m, body
    direction: np.ndarray          # unit, body (thrust direction)
    f_ref: float                   # N at p_ref
    p_ref: float                   # Pa
    mib: float                     # s, minimum impulse bit on-time
    t_delay: float = 0.0
    t_ramp: float = 0.0
    isp: float = 60.0
    fault: FaultSpec = field(default_factory=FaultSpec)

    @classmethod
    def from_config(cls, cfg: ThrusterConfig) -> "Thruster":
        return cls(id=cfg.id, position=cfg.position.copy(),
                   direction=cfg.direction.copy(), f_ref=cfg.f_ref,
                   p_ref=cfg.p_ref, mib=cfg.mib, t_delay=cfg.t_delay,
                   t_ramp=cfg.t_ramp, isp=cfg.isp)


@dataclass
class PulseCommand:
    thruster_id: str
    t_start: float
    t_on: float
    p_sample: float | None = None  # tank pressure latched at pulse start
    quantized: bool = False        # sub-MIB command was raised to MIB


def build_bank(scenario: Scenario) -> list:
    """Thruster list from the scenario, with the fault schedule applied."""
    bank = [Thruster.from_config(t) for t in scenario.thrusters]
    by_id = {t.id: t for t in bank}
    for f in scenario.faults:
        by_id[f.thruster].fault = FaultSpec(
            kind=f.kind, t_onset=f.t_onset, mdot=f.mdot,
            thrust_fraction=f.thrust_fraction, eta=f.eta,
            extra_delay=f.extra_delay)
    return bank


def quantize_on_time(t_on: float, mib: float) -> tuple:
    """Valves cannot realize on-times in (0, MIB): quantize up and flag."""
    if 0.0 < t_on < mib:
        return mib, True
    return t_on, False


def _plateau_thrust(thruster: Thruster, p: float, t: float) -> float:
    """Nominal plateau thrust at pressure p with efficiency faults applied."""
    thrust = thruster.f_ref * p / thruster.p_ref
    fault = thruster.fault
    if fault.kind == FAULT_DEGRADED and fault.active(t):
        thrust *= fault.eta
    return thrust


def shape_pulse(cmd: PulseCommand, thruster: Thruster, p: float, t: float) -> float:
    """Instantaneous thrust of one commanded pulse at time t.

    Trapezoid: delay, ramp up over t_ramp, plateau, ramp down over t_ramp
    ending at t_start + delay + t_on + t_ramp.  The delivered impulse is
    plateau * t_on exactly.  Sub-MIB commands are quantized up to MIB.
    """
    t_on, _ = quantize_on_time(cmd.t_on, thruster.mib)
    if t_on <= 0.0:
        return 0.0
    fault = thruster.fault
    delay = thruster.t_delay
    if fault.kind == FAULT_EXTRA_DELAY and fault.active(cmd.t_start):
        delay += fault.extra_delay
    if fault.kind == FAULT_STUCK_CLOSED and fault.active(t):
        return 0.0

    rise = cmd.t_start + delay
    ramp = thruster.t_ramp
    fall_end = rise + t_on + ramp
    if t < rise or t >= fall_end:
        return 0.0
    plateau = _plateau_thrust(thruster, cmd.p_sample if cmd.p_sample is not None else p, t)
    if ramp <= 0.0:
        return plateau
    if t < rise + ramp:
        return plateau * (t - rise) / ramp
    if t < rise + t_on:
        return plateau
    return plateau * (fall_end - t) / ramp


def bank_forces_torques(commands: list, bank: list, p: float, t: float):
    """Total body force, torque, and propellant mass flow of the bank.

    Faults: stuck-open thrusts continuously regardless of commands,
    stuck-closed produces nothing, a leak adds a continuous side thrust and
    mass flow on top of whatever is commanded.
    """
    by_id = {th.id: th for th in bank}
    thrust = {th.id: 0.0 for th in bank}
    for cmd in commands:
        if cmd.thruster_id not in by_id:
            raise UnknownThrusterId(cmd.thruster_id)
        thrust[cmd.thruster_id] += shape_pulse(cmd, by_id[cmd.thruster_id], p, t)

    force = np.zeros(3)
    torque = np.zeros(3)
    mdot = 0.0
    for th in bank:
        level = thrust[th.id]
        fault = th.fault
        if fault.kind == FAULT_STUCK_OPEN and fault.active(t):
            level = _plateau_thrust(th, p, t)
        elif fault.kind == FAULT_STUCK_CLOSED and fault.active(t):
            level = 0.0
        if fault.kind == FAULT_LEAK and fault.active(t):
            level += fault.thrust_fraction * th.f_ref * p / th.p_ref
            mdot += fault.mdot
        if level != 0.0:
            f_vec = level * th.direction
            force += f_vec
            torque += np.cross(th.position, f_vec)
            mdot += level / (th.isp * G0)
    return force, torque, mdot


def main_engine_thrust(throttle: float, t_since_ignition: float, f_max: float,
                       t_rampup: float) -> float:
    """Throttle-ramp main engine force magnitude."""
    if not 0.0 <= throttle <= 1.0:
        raise ValueError(f"throttle {throttle} outside [0, 1]")
    if throttle == 0.0 or t_since_ignition < 0.0:
        return 0.0
    return throttle * f_max * min(1.0, t_since_ignition / t_rampup)
