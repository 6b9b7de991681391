"""Scenario configuration: loading, schema validation, and overrides.

The scenario file is TOML.  All quantities are SI except angles and
angular rates, which are given in degrees / deg/s in the file and
converted here at the boundary.  Unknown keys anywhere in the file are
rejected so typos fail loudly before a run starts.
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEG = np.pi / 180.0

COMPARATORS = ("<", ">", "<=", ">=")
CONTROLLER_MODES = ("phase_plane", "mpc", "adaptive")
SLOSH_MODES = ("bulge", "constant_torque", "off")
FAULT_KINDS = ("none", "stuck_closed", "stuck_open", "leak", "degraded", "extra_delay")
SEPARATION_FAULTS = ("none", "no_fire", "late_fire", "partial_spring")


class ConfigInvalid(ValueError):
    """Scenario validation failure; the message names the offending field."""

    def __init__(self, path: str, reason: str = ""):
        self.path = path
        self.reason = reason
        msg = f"ConfigInvalid: {path}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class _Section:
    """Key-checked reader over one TOML table."""

    def __init__(self, data: dict, where: str):
        if not isinstance(data, dict):
            raise ConfigInvalid(where, "expected a table")
        self.data = dict(data)
        self.where = where

    def _pop(self, key, default):
        if key in self.data:
            return self.data.pop(key)
        if default is _REQUIRED:
            raise ConfigInvalid(f"{self.where}.{key}", "missing required key")
        return default

    def scalar(self, key, default=None, *, positive=False, nonnegative=False,
               low=None, high=None):
        raw = self._pop(key, default)
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigInvalid(f"{self.where}.{key}", "expected a number")
        val = float(raw)
        if positive and not val > 0.0:
            raise ConfigInvalid(f"{self.where}.{key}", "must be > 0")
        if nonnegative and val < 0.0:
            raise ConfigInvalid(f"{self.where}.{key}", "must be >= 0")
        if low is not None and val < low:
            raise ConfigInvalid(f"{self.where}.{key}", f"must be >= {low}")
        if high is not None and val > high:
            raise ConfigInvalid(f"{self.where}.{key}", f"must be <= {high}")
        return val

    def integer(self, key, default=None, *, nonnegative=False):
        raw = self._pop(key, default)
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigInvalid(f"{self.where}.{key}", "expected an integer")
        if nonnegative and raw < 0:
            raise ConfigInvalid(f"{self.where}.{key}", "must be >= 0")
        return int(raw)

    def boolean(self, key, default=None):
        raw = self._pop(key, default)
        if not isinstance(raw, bool):
            raise ConfigInvalid(f"{self.where}.{key}", "expected true/false")
        return raw

    def string(self, key, default=None, *, choices=None):
        raw = self._pop(key, default)
        if not isinstance(raw, str):
            raise ConfigInvalid(f"{self.where}.{key}", "expected a string")
        if choices is not None and raw not in choices:
            raise ConfigInvalid(f"{self.where}.{key}",
                                f"must be one of {', '.join(choices)}")
        return raw

    def vector(self, key, default=None, *, size=3):
        raw = self._pop(key, default)
        if raw is None:
            return None
        arr = np.asarray(raw, dtype=float)
        if arr.shape != (size,):
            raise ConfigInvalid(f"{self.where}.{key}", f"expected {size} numbers")
        return arr

    def unit_vector(self, key, default=None):
        vec = self.vector(key, default)
        norm = np.linalg.norm(vec)
        if norm < 1e-12:
            raise ConfigInvalid(f"{self.where}.{key}", "zero vector")
        return vec / norm

    def matrix3(self, key, default=None):
        """3x3 matrix; a 3-list is taken as a diagonal."""
        raw = self._pop(key, default)
        arr = np.asarray(raw, dtype=float)
        if arr.shape == (3,):
            arr = np.diag(arr)
        if arr.shape != (3, 3):
            raise ConfigInvalid(f"{self.where}.{key}", "expected 3x3 or diagonal 3-list")
        return arr

    def string_list(self, key, default=None):
        raw = self._pop(key, default)
        if raw is None:
            return []
        if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
            raise ConfigInvalid(f"{self.where}.{key}", "expected a list of strings")
        return list(raw)

    def subtables(self, key):
        raw = self.data.pop(key, [])
        if not isinstance(raw, list):
            raise ConfigInvalid(f"{self.where}.{key}", "expected an array of tables")
        return raw

    def subtable(self, key):
        raw = self.data.pop(key, {})
        if not isinstance(raw, dict):
            raise ConfigInvalid(f"{self.where}.{key}", "expected a table")
        return raw

    def finish(self):
        if self.data:
            stray = sorted(self.data)[0]
            raise ConfigInvalid(f"{self.where}.{stray}", "unknown key")


_REQUIRED = object()


@dataclass
class VehicleConfig:
    m_dry: float
    m_prop: float
    j_dry: np.ndarray
    w0: np.ndarray              # rad/s
    q0: np.ndarray
    dt: float
    dt_max: float
    rate_limit: float


@dataclass
class SloshConfig:
    enabled: bool
    mode: str
    fill_fraction: float
    tank_radius: float
    bulge_offset: float
    damping: float
    phi0: float                 # rad
    phi_dot0: float             # rad/s
    constant_torque: np.ndarray


@dataclass
class TankConfig:
    temperature: float
    m_gas: float
    r_gas: float
    volume: float
    rho_prop: float
    k_sun: float
    k_cond: float
    t_env: float
    sun_dir: np.ndarray
    normal_body: np.ndarray
    pressure_sampling: str = "pulse_start"   # or "continuous"


@dataclass
class ThrusterConfig:
    id: str
    position: np.ndarray
    direction: np.ndarray
    f_ref: float
    p_ref: float
    mib: float
    t_delay: float
    t_ramp: float
    isp: float


@dataclass
class EngineConfig:
    f_max: float
    t_rampup: float
    axis: np.ndarray
    misalignment_torque: np.ndarray


@dataclass
class SeparationConfig:
    id: str
    m_pl: float
    j_pl: np.ndarray
    k_spring: float
    stroke: float
    lateral_offset: np.ndarray  # 2-vector
    relay_delays: tuple         # (arm, fire) s
    axis: np.ndarray
    fault: str
    fault_extra_delay: float
    fault_spring_fraction: float


@dataclass
class FswConfig:
    rate_hz: float
    controller: str
    nav_cutoff_hz: float
    nav_deriv_cutoff_hz: float
    gyro_bias_range: float
    gyro_noise_sigma: float
    pp_k_rate: float
    pp_k_ontime: float
    pp_deadband_outer: float
    pp_deadband_inner: float
    mpc_horizon: int
    mpc_weight_count: float
    mpc_weight_terminal: float
    mpc_terminal_box: float
    rls_lambda: float
    rls_p0: float
    rls_theta0: np.ndarray
    adaptive_retarget_after: float

    @property
    def period(self) -> float:
        return 1.0 / self.rate_hz


@dataclass
class FaultEntry:
    thruster: str
    kind: str
    t_onset: float
    mdot: float
    thrust_fraction: float
    eta: float
    extra_delay: float


@dataclass
class PilConfig:
    delay_ticks: int
    timeout: float
    on_timeout: str
    host: str
    port: int


@dataclass
class MonitorConfig:
    id: str
    kind: str                   # threshold | stats
    signal: str
    comparator: str
    limit: float
    persistence: float
    window: float
    outputs: list
    requirements: list
    enabled: bool


@dataclass
class CampaignParam:
    name: str
    path: str
    lower: float
    upper: float
    distribution: str           # uniform | gaussian
    mean: float
    sigma: float


@dataclass
class CampaignConfig:
    kind: str
    n: int
    master_seed: int
    objective: str
    duration: float
    params: list
    ce_population: int
    ce_elite_frac: float
    ce_smoothing: float
    ce_max_iters: int
    ce_sigma_min: float


@dataclass
class TelemetryConfig:
    decimation: int


@dataclass
class Scenario:
    vehicle: VehicleConfig
    slosh: SloshConfig
    tank: TankConfig
    thrusters: list
    engine: EngineConfig
    separations: list
    fsw: FswConfig
    sequence_path: str | None
    faults: list
    pil: PilConfig
    monitors: list
    campaign: CampaignConfig | None
    telemetry: TelemetryConfig
    raw: dict = field(repr=False, default_factory=dict)
    base_dir: Path = field(default_factory=Path)

    def separation_ids(self) -> list:
        return [s.id for s in self.separations]

    def thruster_ids(self) -> list:
        return [t.id for t in self.thrusters]


def _validate_vehicle(tbl: dict) -> VehicleConfig:
    sec = _Section(tbl, "vehicle")
    m_dry = sec.scalar("m_dry", _REQUIRED, positive=True)
    m_prop = sec.scalar("m_prop", _REQUIRED, nonnegative=True)
    j_dry = sec.matrix3("j_dry", _REQUIRED)
    if not np.allclose(j_dry, j_dry.T, atol=1e-9):
        raise ConfigInvalid("vehicle.j_dry", "not symmetric")
    if np.any(np.linalg.eigvalsh(j_dry) <= 0.0):
        raise ConfigInvalid("vehicle.j_dry", "not positive definite")
    w0 = sec.vector("w0_deg_s", [0.0, 0.0, 0.0]) * DEG
    q0 = sec.vector("q0", [1.0, 0.0, 0.0, 0.0], size=4)
    if abs(np.linalg.norm(q0) - 1.0) > 1e-6:
        raise ConfigInvalid("vehicle.q0", "not a unit quaternion")
    dt = sec.scalar("dt", 0.01, positive=True)
    dt_max = sec.scalar("dt_max", 0.5, positive=True)
    rate_limit = sec.scalar("rate_limit", 10.0, positive=True)
    sec.finish()
    return VehicleConfig(m_dry, m_prop, j_dry, w0, q0 / np.linalg.norm(q0),
                         dt, dt_max, rate_limit)


def _validate_slosh(tbl: dict) -> SloshConfig:
    sec = _Section(tbl, "slosh")
    cfg = SloshConfig(
        enabled=sec.boolean("enabled", True),
        mode=sec.string("mode", "bulge", choices=SLOSH_MODES),
        fill_fraction=sec.scalar("fill_fraction", 0.4, low=0.0, high=1.0),
        tank_radius=sec.scalar("tank_radius", 1.0, positive=True),
        bulge_offset=sec.scalar("bulge_offset", 0.0),
        damping=sec.scalar("damping", 0.05, nonnegative=True),
        phi0=sec.scalar("phi0_deg", 0.0) * DEG,
        phi_dot0=sec.scalar("phi_dot0_deg_s", 0.0) * DEG,
        constant_torque=sec.vector("constant_torque", [0.0, 0.0, 0.0]),
    )
    sec.finish()
    return cfg


def _validate_tank(tbl: dict, m_prop: float) -> TankConfig:
    sec = _Section(tbl, "tank")
    cfg = TankConfig(
        temperature=sec.scalar("temperature", 290.0, positive=True),
        m_gas=sec.scalar("m_gas", _REQUIRED, positive=True),
        r_gas=sec.scalar("r_gas", 2077.0, positive=True),
        volume=sec.scalar("volume", _REQUIRED, positive=True),
        rho_prop=sec.scalar("rho_prop", 800.0, positive=True),
        k_sun=sec.scalar("k_sun", 0.0, nonnegative=True),
        k_cond=sec.scalar("k_cond", 0.0, nonnegative=True),
        t_env=sec.scalar("t_env", 270.0, positive=True),
        sun_dir=sec.unit_vector("sun_dir", [1.0, 0.0, 0.0]),
        normal_body=sec.unit_vector("normal_body", [1.0, 0.0, 0.0]),
        pressure_sampling=sec.string("pressure_sampling", "pulse_start",
                                     choices=("pulse_start", "continuous")),
    )
    sec.finish()
    if cfg.volume - m_prop / cfg.rho_prop <= 0.0:
        raise ConfigInvalid("tank.volume", "no ullage volume left for pressurant")
    return cfg


def _validate_thruster(tbl: dict, idx: int) -> ThrusterConfig:
    sec = _Section(tbl, f"thruster[{idx}]")
    cfg = ThrusterConfig(
        id=sec.string("id", _REQUIRED),
        position=sec.vector("position", _REQUIRED),
        direction=sec.unit_vector("direction", _REQUIRED),
        f_ref=sec.scalar("f_ref", _REQUIRED, positive=True),
        p_ref=sec.scalar("p_ref", _REQUIRED, positive=True),
        mib=sec.scalar("mib", _REQUIRED, positive=True),
        t_delay=sec.scalar("t_delay", 0.0, nonnegative=True),
        t_ramp=sec.scalar("t_ramp", 0.0, nonnegative=True),
        isp=sec.scalar("isp", 60.0, positive=True),
    )
    sec.finish()
    if cfg.mib < 2.0 * cfg.t_ramp:
        raise ConfigInvalid(f"thruster[{idx}].mib", "must be >= 2 * t_ramp")
    return cfg


def _validate_engine(tbl: dict) -> EngineConfig:
    sec = _Section(tbl, "engine")
    cfg = EngineConfig(
        f_max=sec.scalar("f_max", 0.0, nonnegative=True),
        t_rampup=sec.scalar("t_rampup", 1.0, positive=True),
        axis=sec.unit_vector("axis", [0.0, 0.0, 1.0]),
        misalignment_torque=sec.vector("misalignment_torque", [0.0, 0.0, 0.0]),
    )
    sec.finish()
    return cfg


def _validate_separation(tbl: dict, idx: int) -> SeparationConfig:
    sec = _Section(tbl, f"separation[{idx}]")
    delays = sec.vector("relay_delays", [0.1, 0.2], size=2)
    if np.any(delays < 0.0):
        raise ConfigInvalid(f"separation[{idx}].relay_delays", "must be >= 0")
    cfg = SeparationConfig(
        id=sec.string("id", _REQUIRED),
        m_pl=sec.scalar("m_pl", _REQUIRED, positive=True),
        j_pl=sec.matrix3("j_pl", [0.0, 0.0, 0.0]),
        k_spring=sec.scalar("k_spring", _REQUIRED, positive=True),
        stroke=sec.scalar("stroke", _REQUIRED, positive=True),
        lateral_offset=sec.vector("lateral_offset", [0.0, 0.0], size=2),
        relay_delays=(float(delays[0]), float(delays[1])),
        axis=sec.unit_vector("axis", [0.0, 0.0, 1.0]),
        fault=sec.string("fault", "none", choices=SEPARATION_FAULTS),
        fault_extra_delay=sec.scalar("fault_extra_delay", 0.0, nonnegative=True),
        fault_spring_fraction=sec.scalar("fault_spring_fraction", 1.0,
                                         low=0.0, high=1.0),
    )
    sec.finish()
    if cfg.fault == "partial_spring" and cfg.fault_spring_fraction <= 0.0:
        raise ConfigInvalid(f"separation[{idx}].fault_spring_fraction", "must be in (0, 1]")
    return cfg


def _validate_fsw(tbl: dict) -> FswConfig:
    sec = _Section(tbl, "fsw")
    cfg = FswConfig(
        rate_hz=sec.scalar("rate_hz", 10.0, positive=True),
        controller=sec.string("controller", "phase_plane", choices=CONTROLLER_MODES),
        nav_cutoff_hz=sec.scalar("nav_cutoff_hz", 2.0, positive=True),
        nav_deriv_cutoff_hz=sec.scalar("nav_deriv_cutoff_hz", 1.0, positive=True),
        gyro_bias_range=sec.scalar("gyro_bias_range", 0.0, nonnegative=True),
        gyro_noise_sigma=sec.scalar("gyro_noise_sigma", 0.0, nonnegative=True),
        pp_k_rate=sec.scalar("pp_k_rate", 20.0, positive=True),
        pp_k_ontime=sec.scalar("pp_k_ontime", 2.0, positive=True),
        pp_deadband_outer=sec.scalar("pp_deadband_outer", 0.02, positive=True),
        pp_deadband_inner=sec.scalar("pp_deadband_inner", 0.005, positive=True),
        mpc_horizon=sec.integer("mpc_horizon", 4),
        mpc_weight_count=sec.scalar("mpc_weight_count", 1.0, positive=True),
        mpc_weight_terminal=sec.scalar("mpc_weight_terminal", 1.0e7, positive=True),
        mpc_terminal_box=sec.scalar("mpc_terminal_box", 2.0e-4, positive=True),
        rls_lambda=sec.scalar("rls_lambda", 1.0, low=0.5, high=1.0),
        rls_p0=sec.scalar("rls_p0", 1.0e6, positive=True),
        rls_theta0=sec.vector("rls_theta0", [0.0] * 6, size=6),
        adaptive_retarget_after=sec.scalar("adaptive_retarget_after", 30.0,
                                           nonnegative=True),
    )
    sec.finish()
    if cfg.pp_deadband_inner >= cfg.pp_deadband_outer:
        raise ConfigInvalid("fsw.pp_deadband_inner", "must be < pp_deadband_outer")
    if not 1 <= cfg.mpc_horizon <= 8:
        raise ConfigInvalid("fsw.mpc_horizon", "must be in 1..8")
    return cfg


def _validate_fault(tbl: dict, idx: int, thruster_ids: list) -> FaultEntry:
    sec = _Section(tbl, f"fault[{idx}]")
    cfg = FaultEntry(
        thruster=sec.string("thruster", _REQUIRED),
        kind=sec.string("kind", _REQUIRED, choices=FAULT_KINDS),
        t_onset=sec.scalar("t_onset", 0.0, nonnegative=True),
        mdot=sec.scalar("mdot", 0.0, nonnegative=True),
        thrust_fraction=sec.scalar("thrust_fraction", 0.0, low=0.0, high=1.0),
        eta=sec.scalar("eta", 1.0, high=1.0),
        extra_delay=sec.scalar("extra_delay", 0.0, nonnegative=True),
    )
    sec.finish()
    if cfg.kind == "degraded" and not cfg.eta > 0.0:
        raise ConfigInvalid(f"fault[{idx}].eta", "must be in (0, 1]")
    if cfg.thruster not in thruster_ids:
        raise ConfigInvalid(f"fault[{idx}].thruster", f"unknown thruster {cfg.thruster!r}")
    return cfg


def _validate_pil(tbl: dict) -> PilConfig:
    sec = _Section(tbl, "pil")
    cfg = PilConfig(
        delay_ticks=sec.integer("delay_ticks", 0, nonnegative=True),
        timeout=sec.scalar("timeout", 5.0, positive=True),
        on_timeout=sec.string("on_timeout", "hold_last_command",
                              choices=("hold_last_command", "abort")),
        host=sec.string("host", "127.0.0.1"),
        port=sec.integer("port", 45550),
    )
    sec.finish()
    return cfg


def _validate_monitor(tbl: dict, idx: int) -> MonitorConfig:
    sec = _Section(tbl, f"monitor[{idx}]")
    kind = sec.string("kind", _REQUIRED, choices=("threshold", "stats"))
    cfg = MonitorConfig(
        id=sec.string("id", _REQUIRED),
        kind=kind,
        signal=sec.string("signal", _REQUIRED),
        comparator=sec.string("comparator", ">", choices=COMPARATORS),
        limit=sec.scalar("limit", 0.0),
        persistence=sec.scalar("persistence", 0.0, nonnegative=True),
        window=sec.scalar("window", 10.0, positive=True),
        outputs=sec.string_list("outputs", ["mean", "max", "rms"]),
        requirements=sec.string_list("requirements", []),
        enabled=sec.boolean("enabled", True),
    )
    sec.finish()
    for out in cfg.outputs:
        if out not in ("mean", "max", "rms"):
            raise ConfigInvalid(f"monitor[{idx}].outputs", f"unknown output {out!r}")
    return cfg


def _validate_campaign(tbl: dict) -> CampaignConfig:
    sec = _Section(tbl, "campaign")
    params_raw = sec.subtables("param")
    ce = _Section(sec.subtable("ce"), "campaign.ce")
    cfg = CampaignConfig(
        kind=sec.string("kind", "mc", choices=("mc", "ce")),
        n=sec.integer("n", 10),
        master_seed=sec.integer("master_seed", 0),
        objective=sec.string("objective", "max_nutation"),
        duration=sec.scalar("duration", 60.0, positive=True),
        params=[],
        ce_population=ce.integer("population", 50),
        ce_elite_frac=ce.scalar("elite_frac", 0.1, low=0.0, high=1.0),
        ce_smoothing=ce.scalar("smoothing", 0.7, low=0.0, high=1.0),
        ce_max_iters=ce.integer("max_iters", 20),
        ce_sigma_min=ce.scalar("sigma_min", 0.01, positive=True),
    )
    ce.finish()
    sec.finish()
    if cfg.n < 1:
        raise ConfigInvalid("campaign.n", "must be >= 1")
    if cfg.ce_population * cfg.ce_elite_frac < 2.0:
        raise ConfigInvalid("campaign.ce.population",
                            "population * elite_frac must be >= 2")
    for i, p in enumerate(params_raw):
        psec = _Section(p, f"campaign.param[{i}]")
        param = CampaignParam(
            name=psec.string("name", _REQUIRED),
            path=psec.string("path", _REQUIRED),
            lower=psec.scalar("lower", _REQUIRED),
            upper=psec.scalar("upper", _REQUIRED),
            distribution=psec.string("distribution", "uniform",
                                     choices=("uniform", "gaussian")),
            mean=psec.scalar("mean", 0.0),
            sigma=psec.scalar("sigma", 1.0, positive=True),
        )
        psec.finish()
        if not param.lower < param.upper:
            raise ConfigInvalid(f"campaign.param[{i}].lower", "must be < upper")
        cfg.params.append(param)
    return cfg


def _validate_telemetry(tbl: dict) -> TelemetryConfig:
    sec = _Section(tbl, "telemetry")
    cfg = TelemetryConfig(decimation=sec.integer("decimation", 10))
    sec.finish()
    if cfg.decimation < 1:
        raise ConfigInvalid("telemetry.decimation", "must be >= 1")
    return cfg


def validate_scenario(raw: dict, base_dir: Path | None = None) -> Scenario:
    """Validate a parsed scenario dict and return the typed Scenario."""
    base_dir = base_dir or Path.cwd()
    raw = copy.deepcopy(raw)
    top = _Section(raw, "scenario")

    vehicle = _validate_vehicle(top.subtable("vehicle"))
    slosh = _validate_slosh(top.subtable("slosh"))
    tank = _validate_tank(top.subtable("tank"), vehicle.m_prop)
    thrusters = [_validate_thruster(t, i) for i, t in enumerate(top.subtables("thruster"))]
    ids = [t.id for t in thrusters]
    if len(set(ids)) != len(ids):
        raise ConfigInvalid("thruster.id", "duplicate thruster id")
    engine = _validate_engine(top.subtable("engine"))
    separations = [_validate_separation(s, i)
                   for i, s in enumerate(top.subtables("separation"))]
    sep_ids = [s.id for s in separations]
    if len(set(sep_ids)) != len(sep_ids):
        raise ConfigInvalid("separation.id", "duplicate separation id")
    fsw = _validate_fsw(top.subtable("fsw"))

    seq_tbl = _Section(top.subtable("sequence"), "sequence")
    sequence_path = seq_tbl.string("file", None) if seq_tbl.data else None
    seq_tbl.data.pop("file", None)
    seq_tbl.finish()

    faults = [_validate_fault(f, i, ids) for i, f in enumerate(top.subtables("fault"))]
    pil = _validate_pil(top.subtable("pil"))
    monitors = [_validate_monitor(m, i) for i, m in enumerate(top.subtables("monitor"))]
    mon_ids = [m.id for m in monitors]
    if len(set(mon_ids)) != len(mon_ids):
        raise ConfigInvalid("monitor.id", "duplicate monitor id")

    campaign_tbl = top.subtable("campaign")
    campaign = _validate_campaign(campaign_tbl) if campaign_tbl else None
    telemetry = _validate_telemetry(top.subtable("telemetry"))
    top.finish()

    # monitors may only watch published telemetry signals
    from .telemetry import trace_signal_names
    known = set(trace_signal_names(sep_ids))
    for i, mon in enumerate(monitors):
        if mon.signal not in known:
            raise ConfigInvalid(f"monitor[{i}].signal",
                                f"unknown signal {mon.signal!r}")
    # campaign parameter paths must resolve against this scenario
    if campaign is not None:
        for i, par in enumerate(campaign.params):
            try:
                resolve_path(raw, par.path)
            except (KeyError, IndexError, ValueError):
                raise ConfigInvalid(f"campaign.param[{i}].path",
                                    f"{par.path!r} does not resolve") from None

    scn = Scenario(vehicle=vehicle, slosh=slosh, tank=tank, thrusters=thrusters,
                   engine=engine, separations=separations, fsw=fsw,
                   sequence_path=sequence_path, faults=faults, pil=pil,
                   monitors=monitors, campaign=campaign, telemetry=telemetry,
                   raw=raw, base_dir=Path(base_dir))

    # Cross-checks: the plant step must divide the FSW period evenly so the
    # lockstep tick boundaries land exactly on plant steps.
    sub = fsw.period / vehicle.dt
    if abs(sub - round(sub)) > 1e-9:
        raise ConfigInvalid("fsw.rate_hz", "FSW period must be a multiple of vehicle.dt")
    if vehicle.dt > vehicle.dt_max:
        raise ConfigInvalid("vehicle.dt", "exceeds dt_max")
    return scn


def load_scenario(path: str | Path, overrides: list | None = None) -> Scenario:
    """Load, apply --set overrides, and validate a scenario file."""
    path = Path(path)
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    for ov in overrides or []:
        apply_override(raw, ov)
    return validate_scenario(raw, base_dir=path.parent)


def apply_override(raw: dict, assignment: str) -> None:
    """Apply one KEY.PATH=VALUE override onto the raw scenario dict.

    Array elements are addressed by numeric segment, e.g.
    ``thruster.0.f_ref=25``.  The value is parsed as a TOML literal.
    """
    if "=" not in assignment:
        raise ConfigInvalid(assignment, "override must look like key.path=value")
    key_path, _, literal = assignment.partition("=")
    segments = key_path.strip().split(".")
    try:
        parsed = tomllib.loads(f"v = {literal.strip()}")["v"]
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(key_path, f"bad value {literal.strip()!r}: {exc}") from None
    node = raw
    for seg in segments[:-1]:
        nxt = node[int(seg)] if seg.isdigit() and isinstance(node, list) else None
        if nxt is None:
            if not isinstance(node, dict):
                raise ConfigInvalid(key_path, "path does not resolve")
            nxt = node.setdefault(seg, {})
        node = nxt
    last = segments[-1]
    if isinstance(node, list):
        node[int(last)] = parsed
    elif isinstance(node, dict):
        node[last] = parsed
    else:
        raise ConfigInvalid(key_path, "path does not resolve")


def resolve_path(raw: dict, dotted: str):
    """Read a value at a dotted path (numeric segments index arrays)."""
    node = raw
    for seg in dotted.split("."):
        if isinstance(node, list):
            node = node[int(seg)]
        elif isinstance(node, dict):
            if seg not in node:
                raise KeyError(dotted)
            node = node[seg]
        else:
            raise KeyError(dotted)
    return node
