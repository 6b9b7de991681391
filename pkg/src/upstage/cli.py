"""Command-line entry points.

Verbs: run, serve, fsw, campaign mc|ce, report, validate.  Exit codes:
0 clean completion, 1 configuration or I/O error, 2 monitor violation
under --strict, 3 numerical divergence.  UPSTAGE_LOG sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

log = logging.getLogger("upstage")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VIOLATION = 2
EXIT_DIVERGED = 3


def _setup_logging() -> None:
    level = os.environ.get("UPSTAGE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY.PATH=VALUE",
                   help="override a scenario value (repeatable)")


def _load(path: str, overrides: list):
    from .config import load_scenario
    return load_scenario(path, overrides)


def _monitor_verdicts(scenario, trace) -> dict:
    from .vnv.monitors import Monitor, eval_monitor
    out = {}
    for cfg in scenario.monitors:
        mon = Monitor.from_config(cfg)
        if not mon.enabled:
            continue
        verdict = eval_monitor(mon, trace)
        out[mon.id] = {
            "kind": verdict.kind,
            "passed": verdict.passed,
            "violations": [{"t_open": v.t_open, "t_close": v.t_close,
                            "peak": v.peak} for v in verdict.violations],
        }
        if verdict.stats is not None:
            out[mon.id]["stats"] = {"mean": verdict.stats.mean,
                                    "max": verdict.stats.max,
                                    "rms": verdict.stats.rms}
    return out


def _write_summary(out_dir: Path, result, verdicts: dict, exit_code: int) -> None:
    summary = {
        "exit_code": exit_code,
        "plant_ticks": result.plant_ticks,
        "fsw_ticks": result.fsw_ticks,
        "pulse_count": result.pulse_count,
        "max_nutation_rad": result.max_nutation,
        "steady_max_nutation_rad": result.steady_max_nutation,
        "diverged": result.diverged,
        "final_m_prop": result.state.m_prop,
        "monitors": verdicts,
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _emit_plots(out_dir: Path, trace) -> None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not installed; skipping --plots")
        return
    deg = 180.0 / np.pi
    t = trace.t
    panels = [
        ("rates_deg_s", [("wx", deg), ("wy", deg), ("wz", deg)], "rate [deg/s]"),
        ("nutation_deg", [("nutation", deg)], "nutation half-cone [deg]"),
        ("tank", [("p_tank", 1e-5)], "tank pressure [bar]"),
        ("propellant", [("m_prop", 1.0)], "propellant [kg]"),
    ]
    for name, series, ylabel in panels:
        fig, ax = plt.subplots(figsize=(9, 4))
        for col, scale in series:
            ax.plot(t, trace.signal(col) * scale, label=col, linewidth=0.9)
        ax.set_xlabel("t [s]")
        ax.set_ylabel(ylabel)
        ax.legend(loc="best", fontsize=8)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        fig.savefig(out_dir / f"{name}.png", dpi=120)
        plt.close(fig)


def cmd_run(args) -> int:
    from .simloop import run_scenario
    scenario = _load(args.scenario, args.overrides)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_scenario(scenario, duration=args.duration, seed=args.seed,
                          out_dir=out_dir)
    verdicts = _monitor_verdicts(scenario, result.trace)
    code = EXIT_OK
    if result.diverged:
        code = EXIT_DIVERGED
    elif args.strict and any(
            not v["passed"] for v in verdicts.values()):
        code = EXIT_VIOLATION
    _write_summary(out_dir, result, verdicts, code)
    if args.plots:
        _emit_plots(out_dir, result.trace)
    print(f"run: {result.plant_ticks} plant ticks, {result.pulse_count} pulses, "
          f"max nutation {np.rad2deg(result.max_nutation):.3f} deg -> {out_dir}")
    return code


def cmd_serve(args) -> int:
    from .fsw import FlightSoftware
    from .pil import SocketPeer
    from .service import ServiceController, TelemetryService
    from .simloop import ClosedLoop, Hooks, InProcessPeer, load_program

    scenario = _load(args.scenario, args.overrides)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    fsw = None
    if args.pil_listen:
        host, port = _host_port(args.pil_listen)
        peer = SocketPeer(host, port, scenario.fsw.period,
                          scenario.pil.delay_ticks, len(scenario.thrusters),
                          timeout=scenario.pil.timeout)
        print(f"serve: lockstep endpoint on {host}:{peer.bound_port}, "
              "waiting for fsw peer", flush=True)
    else:
        program = load_program(scenario)
        fsw = FlightSoftware(scenario, program,
                             link_delay=scenario.pil.delay_ticks)
        peer = InProcessPeer(fsw)

    service = None
    hooks = Hooks()
    if args.telemetry_listen:
        host, port = _host_port(args.telemetry_listen)
        service = TelemetryService(host, port)
        print(f"serve: telemetry/command endpoint on {host}:{service.bound_port}",
              flush=True)

    loop = ClosedLoop(scenario, peer, seed=args.seed, out_dir=out_dir,
                      hooks=hooks)
    if service is not None:
        service.hello = {"type": "hello",
                         "scenario": str(args.scenario),
                         "states": loop.seq_state_names,
                         "thrusters": [t.id for t in loop.bank],
                         "rate_hz": scenario.fsw.rate_hz,
                         "decimation": scenario.telemetry.decimation,
                         "dt": scenario.vehicle.dt}
        controller = ServiceController(service, loop, fsw=fsw,
                                       realtime=args.realtime)
        hooks.pre_exchange = controller.pre_exchange
        hooks.on_row = controller.on_row
    try:
        result = loop.run(args.duration)
    finally:
        if service is not None:
            service.close()
    verdicts = _monitor_verdicts(scenario, result.trace)
    code = EXIT_DIVERGED if result.diverged else EXIT_OK
    _write_summary(out_dir, result, verdicts, code)
    print(f"serve: completed {result.plant_ticks} plant ticks -> {out_dir}")
    return code


def cmd_fsw(args) -> int:
    from .fsw import FlightSoftware
    from .pil import serve_fsw
    from .simloop import load_program

    scenario = _load(args.scenario, args.overrides)
    host, port = _host_port(args.connect)
    program = load_program(scenario)
    fsw = FlightSoftware(scenario, program, link_delay=scenario.pil.delay_ticks)
    try:
        n = serve_fsw(host, port, fsw, scenario.fsw.period,
                      scenario.pil.delay_ticks, timeout=scenario.pil.timeout)
    except ConnectionError as exc:
        print(f"fsw: connection failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "fsw_summary.json").write_text(json.dumps(
            {"frames_answered": n, "pulse_count": fsw.pulse_count},
            indent=2, sort_keys=True) + "\n")
    print(f"fsw: answered {n} frames")
    return EXIT_OK


def _campaign_config(args):
    """Campaign section either inline in the scenario or in a standalone
    file that points at one via a top-level `scenario` key."""
    import sys as _sys
    if _sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    from .config import validate_scenario

    path = Path(args.config)
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    if "scenario" in raw and isinstance(raw["scenario"], str):
        scn_path = path.parent / raw.pop("scenario")
        with open(scn_path, "rb") as fh:
            scn_raw = tomllib.load(fh)
        scn_raw["campaign"] = raw.get("campaign", {})
        raw = scn_raw
        base_dir = scn_path.parent
    else:
        base_dir = path.parent
    from .config import apply_override
    for ov in args.overrides:
        apply_override(raw, ov)
    scenario = validate_scenario(raw, base_dir=base_dir)
    if scenario.campaign is None:
        raise ValueError("no [campaign] section found")
    return raw, base_dir, scenario


def cmd_campaign(args) -> int:
    from .vnv.campaign import run_monte_carlo
    from .vnv.crossentropy import CEOptions, ce_search

    raw, base_dir, scenario = _campaign_config(args)
    cfg = scenario.campaign
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.kind == "mc":
        result = run_monte_carlo(raw, base_dir, cfg.params, cfg.n,
                                 cfg.master_seed, cfg.duration, cfg.objective)
    else:
        options = CEOptions(population=cfg.ce_population,
                            elite_frac=cfg.ce_elite_frac,
                            smoothing=cfg.ce_smoothing,
                            max_iters=cfg.ce_max_iters,
                            sigma_min=cfg.ce_sigma_min)
        result = ce_search(raw, base_dir, cfg.params, cfg.objective, options,
                           cfg.master_seed, cfg.duration)
    result.save(out_dir / f"campaign_{args.kind}.json")
    ok = sum(1 for s in result.samples if s.status == "ok")
    best = result.best
    print(f"campaign {args.kind}: {len(result.samples)} samples ({ok} ok), "
          f"objective {cfg.objective}, best "
          f"{best.objective if best else float('nan'):.6g} -> {out_dir}")
    return EXIT_OK


def cmd_report(args) -> int:
    from .vnv.campaign import load_campaign
    from .vnv.report import generate_report, write_report
    from .vnv.requirements import parse_requirements
    from .vnv.monitors import Monitor

    tree = parse_requirements(args.requirements)
    scenario = _load(args.scenario, args.overrides)
    monitors = [Monitor.from_config(m) for m in scenario.monitors]
    campaigns = {}
    results_dir = Path(args.results)
    for path in sorted(results_dir.glob("campaign_*.json")):
        campaigns[path.stem.replace("campaign_", "")] = load_campaign(path)
    if not campaigns:
        print(f"report: no campaign_*.json under {results_dir}", file=sys.stderr)
        return EXIT_CONFIG
    report = generate_report(tree, campaigns, monitors)
    doc, tab = write_report(report, args.out)
    n_pass = sum(1 for s in report.status.values() if s == "pass")
    n_fail = sum(1 for s in report.status.values() if s == "fail")
    print(f"report: {len(report.status)} requirements "
          f"({n_pass} pass, {n_fail} fail, "
          f"{len(report.status) - n_pass - n_fail} unverified) -> {doc}")
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = _load(args.scenario, args.overrides)
    from .simloop import load_program
    program = load_program(scenario)
    n_states = len(program.states) if program else 0
    print(f"validate: ok ({len(scenario.thrusters)} thrusters, "
          f"{len(scenario.separations)} separation devices, "
          f"{n_states} sequence states)")
    return EXIT_OK


def _host_port(text: str) -> tuple:
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="upstage",
        description="Upper-stage attitude GNC workbench")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="closed loop in-process")
    p.add_argument("scenario")
    p.add_argument("--duration", type=float, default=600.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out/run")
    p.add_argument("--strict", action="store_true",
                   help="exit 2 on monitor violation")
    p.add_argument("--plots", action="store_true",
                   help="write time-series plots")
    _add_common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("serve", help="host the plant, lockstep endpoint, "
                                     "and telemetry/command stream")
    p.add_argument("scenario")
    p.add_argument("--pil-listen", metavar="HOST:PORT",
                   help="wait for a remote fsw peer (default: in-process FSW)")
    p.add_argument("--telemetry-listen", metavar="HOST:PORT")
    p.add_argument("--duration", type=float, default=600.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out/serve")
    p.add_argument("--realtime", action="store_true",
                   help="pace simulation time to wall time")
    _add_common(p)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("fsw", help="run the flight software as a remote peer")
    p.add_argument("--connect", required=True, metavar="HOST:PORT")
    p.add_argument("--scenario", required=True,
                   help="scenario supplying the FSW configuration")
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_fsw)

    p = sub.add_parser("campaign", help="run a verification campaign")
    p.add_argument("kind", choices=["mc", "ce"])
    p.add_argument("config", help="scenario with [campaign], or a campaign "
                                  "file pointing at one")
    p.add_argument("--out", default="out/campaign")
    _add_common(p)
    p.set_defaults(fn=cmd_campaign)

    p = sub.add_parser("report", help="requirement coverage report")
    p.add_argument("--requirements", required=True)
    p.add_argument("--results", required=True,
                   help="directory containing campaign_*.json")
    p.add_argument("--scenario", required=True,
                   help="scenario declaring the monitors")
    p.add_argument("--out", default="out/report")
    _add_common(p)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("validate", help="schema-check a scenario")
    p.add_argument("scenario")
    _add_common(p)
    p.set_defaults(fn=cmd_validate)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except BrokenPipeError:
        return EXIT_CONFIG
    except Exception as exc:
        from .config import ConfigInvalid
        from .sequencer import SequenceError
        kind = type(exc).__name__
        if isinstance(exc, ConfigInvalid):
            print(str(exc), file=sys.stderr)
        elif isinstance(exc, SequenceError):
            prefix = getattr(exc, "filename", "")
            print(f"{prefix}:{exc}" if prefix else str(exc), file=sys.stderr)
        else:
            print(f"{kind}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
