"""In-process vs two-process equivalence runs.

Runs the identical scenario once with the flight software in-process and
once with it in a separate process behind the lockstep socket, then
compares the full plant-side telemetry traces.  Because the wire codec
is bit-exact and both sides execute the same arithmetic on the same
inputs, the expected difference is exactly zero.
"""

from __future__ import annotations

import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import Scenario, load_scenario
from .fsw import FlightSoftware
from .pil import SocketPeer
from .simloop import ClosedLoop, InProcessPeer, load_program
from .telemetry import Trace


@dataclass
class EquivalenceResult:
    max_abs_diff: float
    per_signal: dict
    string_columns_equal: bool
    n_rows: int

    @property
    def identical(self) -> bool:
        return self.max_abs_diff == 0.0 and self.string_columns_equal


def compare_traces(a: Trace, b: Trace) -> EquivalenceResult:
    if set(a.columns) != set(b.columns) or len(a) != len(b):
        raise ValueError("traces are not comparable (columns or length differ)")
    per_signal = {}
    strings_equal = True
    worst = 0.0
    for name, col in a.columns.items():
        other = b.columns[name]
        if col.dtype == object:
            strings_equal = strings_equal and bool(np.all(col == other))
            continue
        diff = float(np.max(np.abs(col - other))) if len(col) else 0.0
        per_signal[name] = diff
        worst = max(worst, diff)
    return EquivalenceResult(max_abs_diff=worst, per_signal=per_signal,
                             string_columns_equal=strings_equal,
                             n_rows=len(a))


def run_in_process(scenario: Scenario, duration: float, seed: int,
                   out_dir=None):
    fsw = FlightSoftware(scenario, load_program(scenario),
                         link_delay=scenario.pil.delay_ticks)
    loop = ClosedLoop(scenario, InProcessPeer(fsw), seed=seed, out_dir=out_dir)
    return loop.run(duration)


def run_two_process(scenario: Scenario, scenario_path: str | Path,
                    duration: float, seed: int, out_dir=None,
                    overrides: list | None = None):
    """Socket executor: FSW spawned as `upstage fsw` on this host."""
    peer = SocketPeer(scenario.pil.host, 0, scenario.fsw.period,
                      scenario.pil.delay_ticks, len(scenario.thrusters),
                      timeout=scenario.pil.timeout)
    cmd = [sys.executable, "-m", "upstage", "fsw",
           "--connect", f"{scenario.pil.host}:{peer.bound_port}",
           "--scenario", str(scenario_path)]
    for ov in overrides or []:
        cmd += ["--set", ov]
    child = subprocess.Popen(cmd, stdout=subprocess.PIPE,
                             stderr=subprocess.PIPE)
    try:
        loop = ClosedLoop(scenario, peer, seed=seed, out_dir=out_dir)
        result = loop.run(duration)
    except BaseException:
        child.kill()
        child.wait()
        raise
    out, err = child.communicate(timeout=30)
    if child.returncode != 0:
        raise RuntimeError(f"fsw peer exited {child.returncode}: "
                           f"{err.decode(errors='replace')}")
    return result


def run_equivalence(scenario_path: str | Path, n_ticks: int, seed: int = 0,
                    overrides: list | None = None,
                    out_dir: str | Path | None = None) -> EquivalenceResult:
    """Both executors over n_ticks FSW frames; returns the trace diff."""
    scenario = load_scenario(scenario_path, overrides)
    duration = n_ticks * scenario.fsw.period
    out_a = Path(out_dir) / "inproc" if out_dir else None
    out_b = Path(out_dir) / "socket" if out_dir else None
    res_a = run_in_process(scenario, duration, seed, out_dir=out_a)
    scenario_b = load_scenario(scenario_path, overrides)
    res_b = run_two_process(scenario_b, scenario_path, duration, seed,
                            out_dir=out_b, overrides=overrides)
    return compare_traces(res_a.trace, res_b.trace)
