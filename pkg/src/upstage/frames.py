"""Sensor/actuator frame types: the only interface between plant and FSW.

The flight software sees the plant exclusively through SensorFrame and
answers exclusively with ActuatorFrame, whether it runs in-process or as
a remote peer over the lockstep link.  Discrete states and flags travel
in a single 64-bit field so the wire form stays fixed-size per scenario.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Discretes bit layout (plant -> FSW): two bits per separation device for
# the chain phase, in scenario order, then flag bits from 48 up.
PHASE_BITS_PER_DEVICE = 2
FLAG_MIB_QUANTIZED = 1 << 48
FLAG_LINK_TIMEOUT = 1 << 49
FLAG_INFEASIBLE_TARGET = 1 << 50   # echoed from FSW status
FLAG_COVARIANCE_RESET = 1 << 51
FLAG_TICK_GAP = 1 << 52

PHASE_CODES = {"IDLE": 0, "ARMED": 1, "FIRED": 2, "RELEASED": 3}


def pack_chain_phases(phases: list) -> int:
    word = 0
    for i, phase in enumerate(phases):
        word |= PHASE_CODES[phase] << (PHASE_BITS_PER_DEVICE * i)
    return word


def unpack_chain_phase(discretes: int, index: int) -> int:
    return (discretes >> (PHASE_BITS_PER_DEVICE * index)) & 0b11


@dataclass
class SensorFrame:
    tick: int
    t: float
    w_meas: np.ndarray          # rad/s, gyro with bias + noise
    q_meas: np.ndarray          # unit quaternion
    p_tank: float               # Pa
    m_prop_meas: float          # kg
    discretes: int = 0


@dataclass
class ActuatorFrame:
    tick: int                   # echoes the sensor tick
    on_times: np.ndarray        # s per thruster, each in {0} u [MIB, T_fsw]
    engine_throttle: float = 0.0
    sep_commands: int = 0       # bit 2i = arm(device i), bit 2i+1 = fire(device i)
    flags: int = 0
    # FSW status echoed for plant-side telemetry (identical in-process and
    # over the wire, so traces stay comparable byte for byte)
    rate_err_mag: float = 0.0
    seq_state_idx: int = -1
    ctrl_mode_idx: int = 0

    @classmethod
    def zero(cls, tick: int, n_thrusters: int) -> "ActuatorFrame":
        return cls(tick=tick, on_times=np.zeros(n_thrusters))


CONTROLLER_MODE_INDEX = {"phase_plane": 0, "mpc": 1, "adaptive": 2}
CONTROLLER_MODE_NAMES = {v: k for k, v in CONTROLLER_MODE_INDEX.items()}


def sep_command_bits(index: int, arm: bool = False, fire: bool = False) -> int:
    word = 0
    if arm:
        word |= 1 << (2 * index)
    if fire:
        word |= 1 << (2 * index + 1)
    return word


def unpack_sep_commands(word: int, index: int) -> dict:
    return {"arm": bool(word >> (2 * index) & 1),
            "fire": bool(word >> (2 * index + 1) & 1)}
