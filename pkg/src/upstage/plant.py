"""Coupled rigid-body / slosh-bulge / tank thermal-pressure plant.

The vehicle is a spinning rigid body whose inertia tensor varies with the
propellant bulge position and the set of still-attached payloads.  The
bulge is a damped pendulum riding the tank wall: its azimuth chases the
transverse-rate direction at the transverse-rate frequency.  Tank
temperature follows solar exposure (attitude-dependent) plus a conductive
relaxation, and pressure follows the ideal-gas law in the ullage volume,
which is what couples attitude history into thruster performance.

Momentum bookkeeping is d(Jw)/dt = tau_ext (relative slosh momentum is
neglected), so with zero external torque the inertial momentum vector is
conserved up to integrator truncation.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigInvalid, Scenario
from .rotations import quat_derivative, quat_normalize, quat_to_matrix

TRANSVERSE_RATE_FLOOR = 1e-6  # rad/s


class NumericalDivergence(RuntimeError):
    """Body rate exceeded the configured bound; the run is unstable."""

    def __init__(self, t: float, rate: float, limit: float):
        self.t = t
        self.rate = rate
        super().__init__(f"|w| = {rate:.3g} rad/s exceeds {limit:.3g} rad/s at t = {t:.3f} s")


class MassUnderflow(ValueError):
    pass


class InertiaNotSPD(ValueError):
    pass


@dataclass
class SloshState:
    """Propellant bulge riding the tank wall at azimuth phi."""
    phi: float = 0.0            # rad, wrapped to (-pi, pi]
    phi_dot: float = 0.0        # rad/s
    m_s: float = 0.0            # kg, slosh-participating mass
    r_t: float = 1.0            # m, tank wall radius
    z_b: float = 0.0            # m, bulge axial offset
    zeta: float = 0.05          # damping ratio
    enabled: bool = True
    mode: str = "bulge"
    constant_torque: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class TankState:
    """Pressurant thermal state; p is cached from the ideal-gas law."""
    temperature: float
    m_gas: float
    r_gas: float
    volume: float
    rho_prop: float
    k_sun: float
    k_cond: float
    t_env: float
    sun_dir: np.ndarray         # inertial, unit
    normal_body: np.ndarray     # body, unit
    p: float = 0.0              # Pa, derived


@dataclass
class PayloadProps:
    """Mass and inertia contribution of an attached payload."""
    m_pl: float
    j_pl: np.ndarray


@dataclass
class VehicleState:
    t: float
    q: np.ndarray               # scalar-first, body -> inertial
    w: np.ndarray               # rad/s, body
    m_prop: float
    m_dry: float
    j_dry: np.ndarray
    slosh: SloshState
    tank: TankState
    attached: set
    payloads: dict              # id -> PayloadProps, all ever-attached
    dv_log: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self) -> "VehicleState":
        return VehicleState(
            t=self.t, q=self.q.copy(), w=self.w.copy(),
            m_prop=self.m_prop, m_dry=self.m_dry, j_dry=self.j_dry,
            slosh=dataclasses.replace(self.slosh),
            tank=dataclasses.replace(self.tank),
            attached=set(self.attached), payloads=self.payloads,
            dv_log=self.dv_log.copy())

    @property
    def m_total(self) -> float:
        return self.m_dry + self.m_prop + sum(
            self.payloads[pid].m_pl for pid in self.attached)


def ullage_volume(tank: TankState, m_prop: float) -> float:
    return tank.volume - m_prop / tank.rho_prop


def tank_pressure(tank: TankState, m_prop: float, temperature: float | None = None) -> float:
    """Ideal-gas pressure of the pressurant in the ullage volume."""
    temp = tank.temperature if temperature is None else temperature
    vol = ullage_volume(tank, m_prop)
    if vol <= 0.0:
        raise ConfigInvalid("tank.volume", "no ullage volume")
    return tank.m_gas * tank.r_gas * temp / vol


def slosh_mass(fill_fraction: float, m_prop: float) -> float:
    return fill_fraction * m_prop


def _bulge_position(slosh: SloshState, phi: float | None = None) -> np.ndarray:
    p = slosh.phi if phi is None else phi
    return np.array([slosh.r_t * np.cos(p), slosh.r_t * np.sin(p), slosh.z_b])


def point_mass_inertia(m: float, r: np.ndarray) -> np.ndarray:
    return m * (float(r @ r) * np.eye(3) - np.outer(r, r))


def slosh_inertia(slosh: SloshState, m_s: float | None = None,
                  phi: float | None = None) -> np.ndarray:
    mass = slosh.m_s if m_s is None else m_s
    if not slosh.enabled or slosh.mode != "bulge" or mass <= 0.0:
        return np.zeros((3, 3))
    return point_mass_inertia(mass, _bulge_position(slosh, phi))


def effective_inertia(state: VehicleState, phi: float | None = None,
                      m_s: float | None = None) -> np.ndarray:
    """J = J_dry + bulge point-mass term + attached payload terms."""
    j = state.j_dry + slosh_inertia(state.slosh, m_s=m_s, phi=phi)
    for pid in state.attached:
        j = j + state.payloads[pid].j_pl
    return j


def _slosh_inertia_rate(slosh: SloshState, m_s: float, phi: float,
                        phi_dot: float, m_s_dot: float) -> np.ndarray:
    """dJ_slosh/dt from bulge motion and slosh-mass depletion.

    |r_s| is constant in phi, so only the outer-product term moves.
    """
    if not slosh.enabled or slosh.mode != "bulge" or m_s <= 0.0:
        return np.zeros((3, 3))
    r = _bulge_position(slosh, phi)
    dr = np.array([-slosh.r_t * np.sin(phi), slosh.r_t * np.cos(phi), 0.0])
    jdot = -m_s * (np.outer(dr, r) + np.outer(r, dr)) * phi_dot
    if m_s_dot != 0.0:
        jdot = jdot + m_s_dot * (float(r @ r) * np.eye(3) - np.outer(r, r))
    return jdot


def require_spd(j: np.ndarray, what: str = "inertia") -> None:
    try:
        np.linalg.cholesky(j)
    except np.linalg.LinAlgError:
        raise InertiaNotSPD(f"{what} tensor is not positive definite") from None
    if not np.allclose(j, j.T, atol=1e-9 * max(1.0, float(np.trace(j)))):
        raise InertiaNotSPD(f"{what} tensor is not symmetric")


def make_initial_state(scenario: Scenario) -> VehicleState:
    """Build a consistent VehicleState from a validated scenario."""
    veh, slo, tnk = scenario.vehicle, scenario.slosh, scenario.tank

    m_s = slosh_mass(slo.fill_fraction, veh.m_prop)
    enabled = slo.enabled and veh.m_prop > 0.0
    slosh = SloshState(phi=slo.phi0, phi_dot=slo.phi_dot0, m_s=m_s,
                       r_t=slo.tank_radius, z_b=slo.bulge_offset,
                       zeta=slo.damping, enabled=enabled, mode=slo.mode,
                       constant_torque=slo.constant_torque.copy())
    tank = TankState(temperature=tnk.temperature, m_gas=tnk.m_gas,
                     r_gas=tnk.r_gas, volume=tnk.volume, rho_prop=tnk.rho_prop,
                     k_sun=tnk.k_sun, k_cond=tnk.k_cond, t_env=tnk.t_env,
                     sun_dir=tnk.sun_dir.copy(), normal_body=tnk.normal_body.copy())
    payloads = {s.id: PayloadProps(m_pl=s.m_pl, j_pl=s.j_pl) for s in scenario.separations}

    state = VehicleState(t=0.0, q=veh.q0.copy(), w=veh.w0.copy(),
                         m_prop=veh.m_prop, m_dry=veh.m_dry, j_dry=veh.j_dry,
                         slosh=slosh, tank=tank,
                         attached=set(payloads), payloads=payloads)
    state.tank.p = tank_pressure(tank, state.m_prop)

    if slosh.m_s > state.m_prop + 1e-12:
        raise ConfigInvalid("slosh.fill_fraction", "slosh mass exceeds propellant mass")
    try:
        require_spd(effective_inertia(state))
    except InertiaNotSPD:
        raise ConfigInvalid("vehicle.j_dry", "effective inertia not SPD") from None
    return state


def _derivatives(state: VehicleState, j_base: np.ndarray, q, w, phi, phi_dot,
                 temp, m_prop, tau_ext, mdot):
    """Time derivatives of (q, w, phi, phi_dot, T, m_prop).

    j_base is the phi-independent inertia (dry + attached payloads),
    precomputed once per step.  The body of this function is explicit
    scalar arithmetic: it runs millions of times per campaign.
    """
    slo = state.slosh
    wx, wy, wz = float(w[0]), float(w[1]), float(w[2])
    bulge = slo.enabled and slo.mode == "bulge"
    if bulge:
        fill = slo.m_s / state.m_prop if state.m_prop > 0.0 else 0.0
        m_s = fill * m_prop
        m_s_dot = -fill * mdot
        cphi, sphi = math.cos(phi), math.sin(phi)
        rx, ry, rz = slo.r_t * cphi, slo.r_t * sphi, slo.z_b
        rr = rx * rx + ry * ry + rz * rz
        jxx = j_base[0, 0] + m_s * (rr - rx * rx)
        jyy = j_base[1, 1] + m_s * (rr - ry * ry)
        jzz = j_base[2, 2] + m_s * (rr - rz * rz)
        jxy = j_base[0, 1] - m_s * rx * ry
        jxz = j_base[0, 2] - m_s * rx * rz
        jyz = j_base[1, 2] - m_s * ry * rz
        # dJ/dt: bulge motion (|r| constant in phi) plus slosh-mass depletion
        dx, dy = -ry * phi_dot, rx * phi_dot   # dr/dt
        dxx = -m_s * 2.0 * dx * rx + m_s_dot * (rr - rx * rx)
        dyy = -m_s * 2.0 * dy * ry + m_s_dot * (rr - ry * ry)
        dzz = m_s_dot * (rr - rz * rz)
        dxy = -m_s * (dx * ry + rx * dy) - m_s_dot * rx * ry
        dxz = -m_s * dx * rz - m_s_dot * rx * rz
        dyz = -m_s * dy * rz - m_s_dot * ry * rz
        jdw_x = dxx * wx + dxy * wy + dxz * wz
        jdw_y = dxy * wx + dyy * wy + dyz * wz
        jdw_z = dxz * wx + dyz * wy + dzz * wz
    else:
        jxx, jyy, jzz = j_base[0, 0], j_base[1, 1], j_base[2, 2]
        jxy, jxz, jyz = j_base[0, 1], j_base[0, 2], j_base[1, 2]
        jdw_x = jdw_y = jdw_z = 0.0

    tx, ty, tz = float(tau_ext[0]), float(tau_ext[1]), float(tau_ext[2])
    if slo.enabled and slo.mode == "constant_torque":
        tx += slo.constant_torque[0]
        ty += slo.constant_torque[1]
        tz += slo.constant_torque[2]

    hx = jxx * wx + jxy * wy + jxz * wz
    hy = jxy * wx + jyy * wy + jyz * wz
    hz = jxz * wx + jyz * wy + jzz * wz
    bx = tx - (wy * hz - wz * hy) - jdw_x
    by = ty - (wz * hx - wx * hz) - jdw_y
    bz = tz - (wx * hy - wy * hx) - jdw_z

    # Cramer solve of the symmetric 3x3 system J w_dot = b
    c00 = jyy * jzz - jyz * jyz
    c01 = jxz * jyz - jxy * jzz
    c02 = jxy * jyz - jxz * jyy
    det = jxx * c00 + jxy * c01 + jxz * c02
    c11 = jxx * jzz - jxz * jxz
    c12 = jxy * jxz - jxx * jyz
    c22 = jxx * jyy - jxy * jxy
    w_dot = np.array([(c00 * bx + c01 * by + c02 * bz) / det,
                      (c01 * bx + c11 * by + c12 * bz) / det,
                      (c02 * bx + c12 * by + c22 * bz) / det])
    q_dot = quat_derivative(q, w)

    # Bulge pendulum: azimuth chases the transverse-rate direction.  Below
    # the rate floor there is no meaningful equilibrium azimuth, so the
    # forcing is gated off (phi must be stationary at rest) and only the
    # damping term remains.
    if bulge:
        w_t = math.hypot(wx, wy)
        if w_t >= TRANSVERSE_RATE_FLOOR:
            phi_eq = math.atan2(wy, wx)
            diff = math.remainder(phi_eq - phi, 2.0 * math.pi)
            phi_ddot = -2.0 * slo.zeta * w_t * phi_dot + w_t * w_t * math.sin(diff)
        else:
            phi_ddot = -2.0 * slo.zeta * TRANSVERSE_RATE_FLOOR * phi_dot
    else:
        phi_ddot = 0.0

    tank = state.tank
    t_dot = tank.k_cond * (tank.t_env - temp)
    if tank.k_sun != 0.0:
        sun_body = quat_to_matrix(q).T @ tank.sun_dir
        exposure = sun_body @ tank.normal_body
        if exposure > 0.0:
            t_dot += tank.k_sun * exposure
    return q_dot, w_dot, phi_dot, phi_ddot, t_dot, -mdot


def step_dynamics(state: VehicleState, ext_torque: np.ndarray,
                  ext_force: np.ndarray, dt: float, mdot: float = 0.0,
                  rate_limit: float = 10.0) -> VehicleState:
    """One classical RK4 step of the coupled dynamics.

    ext_force is accepted for interface completeness; translational state is
    not propagated (coasting attitude problem), so it only matters through
    the torque already computed by the caller.  mdot is the total propellant
    mass-flow drawn by the actuators, held constant over the step.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    if mdot < 0.0:
        raise ValueError("mdot must be >= 0 (propellant is non-increasing)")
    tau = np.asarray(ext_torque, dtype=float)

    j_base = state.j_dry
    for pid in state.attached:
        j_base = j_base + state.payloads[pid].j_pl

    y0 = (state.q, state.w, state.slosh.phi, state.slosh.phi_dot,
          state.tank.temperature, state.m_prop)

    def rk_add(y, k, h):
        return (y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2],
                y[3] + h * k[3], y[4] + h * k[4], y[5] + h * k[5])

    k1 = _derivatives(state, j_base, *y0, tau, mdot)
    k2 = _derivatives(state, j_base, *rk_add(y0, k1, 0.5 * dt), tau, mdot)
    k3 = _derivatives(state, j_base, *rk_add(y0, k2, 0.5 * dt), tau, mdot)
    k4 = _derivatives(state, j_base, *rk_add(y0, k3, dt), tau, mdot)

    new = state.copy()
    new.t = state.t + dt
    new.q = quat_normalize(y0[0] + (dt / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]))
    new.w = y0[1] + (dt / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    phi = y0[2] + (dt / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    new.slosh.phi = float(np.remainder(phi + np.pi, 2.0 * np.pi) - np.pi)
    if new.slosh.phi <= -np.pi:          # wrap to (-pi, pi]
        new.slosh.phi += 2.0 * np.pi
    new.slosh.phi_dot = y0[3] + (dt / 6.0) * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    new.tank.temperature = y0[4] + (dt / 6.0) * (k1[4] + 2 * k2[4] + 2 * k3[4] + k4[4])
    new.m_prop = max(0.0, y0[5] + (dt / 6.0) * (k1[5] + 2 * k2[5] + 2 * k3[5] + k4[5]))
    if state.slosh.enabled and state.m_prop > 0.0:
        new.slosh.m_s = state.slosh.m_s / state.m_prop * new.m_prop
    if new.m_prop <= 0.0:
        new.slosh.enabled = False
        new.slosh.m_s = 0.0
    new.tank.p = tank_pressure(new.tank, new.m_prop, new.tank.temperature)

    rate = float(np.linalg.norm(new.w))
    if rate > rate_limit:
        raise NumericalDivergence(new.t, rate, rate_limit)
    return new


def apply_impulsive_event(state: VehicleState, dv: np.ndarray, dw: np.ndarray,
                          dm: float = 0.0, dj: np.ndarray | None = None) -> VehicleState:
    """Discrete update of rates and mass properties.

    dv is recorded (translational state is not propagated); dm and dj apply
    to the dry mass properties.
    """
    new = state.copy()
    new.w = state.w + np.asarray(dw, dtype=float)
    new.dv_log = state.dv_log + np.asarray(dv, dtype=float)
    if dm != 0.0:
        if new.m_dry + dm <= 0.0:
            raise MassUnderflow(f"dry mass would drop to {new.m_dry + dm:.3f} kg")
        new.m_dry += dm
    if dj is not None:
        new.j_dry = state.j_dry + np.asarray(dj, dtype=float)
        require_spd(effective_inertia(new))
    return new


def detach_payload(state: VehicleState, payload_id: str) -> VehicleState:
    """Remove a payload from the attached set (mass and inertia drop)."""
    if payload_id not in state.attached:
        raise KeyError(payload_id)
    new = state.copy()
    new.attached.discard(payload_id)
    return new


def inertial_momentum(state: VehicleState) -> np.ndarray:
    """Angular momentum R(q) J(t) w in the inertial frame."""
    return quat_to_matrix(state.q) @ (effective_inertia(state) @ state.w)


def nutation_half_cone(state: VehicleState) -> float:
    """Angle between the body rate and the momentum vector, rad.

    Zero for principal-axis spin; a persistent offset is the signature of
    dynamic unbalance (spin axis away from a principal axis).
    """
    w = state.w
    h = effective_inertia(state) @ w
    nw, nh = np.linalg.norm(w), np.linalg.norm(h)
    if nw < 1e-12 or nh < 1e-12:
        return 0.0
    cosang = float(np.clip((w @ h) / (nw * nh), -1.0, 1.0))
    return float(np.arccos(cosang))
