"""Payload separation: electrical command chain, spring impulse, tip-off.

The chain is a discrete relay sequence IDLE -> ARMED -> FIRED -> RELEASED
with per-relay delays.  Release converts the stored spring energy into a
relative velocity along the separation axis via an energy/momentum
balance on the two-body (stage, payload) system; a lateral offset of the
spring resultant produces the tip-off rate on the stage.

A no-fire fault freezes the chain at ARMED, which the sequencer observes
as a timeout; a late-fire fault stretches the fire relay delay; a partial
spring delivers only a fraction of the nominal energy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SeparationConfig

PHASE_IDLE = "IDLE"
PHASE_ARMED = "ARMED"
PHASE_FIRED = "FIRED"
PHASE_RELEASED = "RELEASED"
PHASES = (PHASE_IDLE, PHASE_ARMED, PHASE_FIRED, PHASE_RELEASED)

FAULT_NONE = "none"
FAULT_NO_FIRE = "no_fire"
FAULT_LATE_FIRE = "late_fire"
FAULT_PARTIAL_SPRING = "partial_spring"


@dataclass
class SeparationDevice:
    payload_id: str
    m_pl: float
    j_pl: np.ndarray
    k_spring: float
    stroke: float
    lateral_offset: np.ndarray      # 2-vector, m
    relay_delays: tuple             # (arm relay, fire relay) s
    axis: np.ndarray                # unit, body; payload departs along +axis
    fault: str = FAULT_NONE
    fault_extra_delay: float = 0.0
    fault_spring_fraction: float = 1.0

    @classmethod
    def from_config(cls, cfg: SeparationConfig) -> "SeparationDevice":
        return cls(payload_id=cfg.id, m_pl=cfg.m_pl, j_pl=cfg.j_pl.copy(),
                   k_spring=cfg.k_spring, stroke=cfg.stroke,
                   lateral_offset=cfg.lateral_offset.copy(),
                   relay_delays=cfg.relay_delays, axis=cfg.axis.copy(),
                   fault=cfg.fault, fault_extra_delay=cfg.fault_extra_delay,
                   fault_spring_fraction=cfg.fault_spring_fraction)

    @property
    def spring_fraction(self) -> float:
        return self.fault_spring_fraction if self.fault == FAULT_PARTIAL_SPRING else 1.0


@dataclass
class ChainState:
    phase: str = PHASE_IDLE
    t_phase_entry: float = 0.0
    pending_arm_at: float | None = None
    pending_release_at: float | None = None
    fire_latched: bool = False      # fire commanded while the arm relay closes
    rejected_fire: bool = False     # FireWithoutArm was flagged this step


@dataclass
class ReleaseEvent:
    t: float
    payload_id: str
    dv_stage: np.ndarray
    dw_stage: np.ndarray
    v_rel: float


def chain_step(chain: ChainState, device: SeparationDevice, commands: dict,
               t: float) -> tuple:
    """Advance the command chain one step.

    commands is {"arm": bool, "fire": bool} (edge-triggered).  Returns the
    updated chain and a ReleaseEvent at the step the chain releases; the
    event carries zero impulse fields, to be filled by release_impulse once
    the caller knows the post-release mass properties.
    """
    chain.rejected_fire = False
    arm = bool(commands.get("arm"))
    fire = bool(commands.get("fire"))

    if arm and chain.phase == PHASE_IDLE and chain.pending_arm_at is None:
        chain.pending_arm_at = t + device.relay_delays[0]
    if fire:
        if chain.phase == PHASE_ARMED:
            _accept_fire(chain, device, t)
        elif chain.phase == PHASE_IDLE and chain.pending_arm_at is not None:
            chain.fire_latched = True
        elif chain.phase in (PHASE_IDLE,):
            chain.rejected_fire = True

    if chain.phase == PHASE_IDLE and chain.pending_arm_at is not None \
            and t >= chain.pending_arm_at:
        chain.phase = PHASE_ARMED
        chain.t_phase_entry = chain.pending_arm_at
        chain.pending_arm_at = None
        if chain.fire_latched:
            _accept_fire(chain, device, chain.t_phase_entry)
            chain.fire_latched = False

    if chain.phase == PHASE_FIRED and chain.pending_release_at is not None \
            and t >= chain.pending_release_at:
        chain.phase = PHASE_RELEASED
        chain.t_phase_entry = chain.pending_release_at
        chain.pending_release_at = None
        return chain, ReleaseEvent(t=chain.t_phase_entry,
                                   payload_id=device.payload_id,
                                   dv_stage=np.zeros(3), dw_stage=np.zeros(3),
                                   v_rel=0.0)
    return chain, None


def _accept_fire(chain: ChainState, device: SeparationDevice, t: float) -> None:
    if device.fault == FAULT_NO_FIRE:
        return  # frozen at ARMED; the sequencer sees a timeout
    delay = device.relay_delays[1]
    if device.fault == FAULT_LATE_FIRE:
        delay += device.fault_extra_delay
    chain.phase = PHASE_FIRED
    chain.t_phase_entry = t
    chain.pending_release_at = t + delay


def release_impulse(device: SeparationDevice, m_stage_after: float,
                    j_after: np.ndarray) -> tuple:
    """Stage delta-v and tip-off rate from the spring energy balance.

    Energy E = 1/2 k x^2 (scaled by the partial-spring fraction) goes into
    the relative motion of the reduced-mass system; the stage recoils with
    the payload's share of the relative velocity, opposite the separation
    axis.  The lateral offset of the spring resultant crosses the impulse
    into a tip-off rate through the post-release inertia.
    """
    if m_stage_after <= 0.0 or device.m_pl <= 0.0:
        raise ValueError("masses must be positive")
    energy = 0.5 * device.k_spring * device.stroke ** 2 * device.spring_fraction
    mu = device.m_pl * m_stage_after / (device.m_pl + m_stage_after)
    v_rel = float(np.sqrt(2.0 * energy / mu))
    dv_mag = v_rel * device.m_pl / (device.m_pl + m_stage_after)
    dv_stage = -dv_mag * device.axis
    p_imp = mu * v_rel * device.axis
    offset = np.array([device.lateral_offset[0], device.lateral_offset[1], 0.0])
    dw = np.linalg.solve(j_after, np.cross(offset, p_imp))
    return dv_stage, dw, v_rel


def integrate_spring_stroke(device: SeparationDevice, m_stage: float,
                            dt: float = 1e-5) -> tuple:
    """High-rate integration of the spring stroke (offline validation).

    Integrates mu * xi_ddot = k_eff * (stroke - xi) until the spring leaves
    contact at xi = stroke; returns (v_rel, separation duration).  Used to
    validate the impulsive release parameters, not in the real-time loop.
    """
    mu = device.m_pl * m_stage / (device.m_pl + m_stage)
    k_eff = device.k_spring * device.spring_fraction
    xi, v = 0.0, 0.0
    t = 0.0
    while xi < device.stroke:
        # velocity Verlet; force is linear in xi
        a = k_eff * (device.stroke - xi) / mu
        xi += v * dt + 0.5 * a * dt * dt
        a_new = k_eff * (device.stroke - max(0.0, min(xi, device.stroke))) / mu
        v += 0.5 * (a + a_new) * dt
        t += dt
        if t > 60.0:
            raise RuntimeError("spring stroke integration did not separate")
    return v, t
