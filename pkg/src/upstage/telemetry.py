"""Published telemetry dictionary, trace writing, and the event log.

The signal names listed here are the shared vocabulary: sequencer
conditions and verification monitors may only reference these (plus the
per-device chain phases, which depend on the scenario).  Trace files are
delimited text with a header row and one row per decimated plant tick;
floats are written with repr-exact precision so that reruns and the
two-process PIL executor can be compared byte for byte.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Columns written per trace row, in order.  seq_state and ctrl_mode are
# strings; everything else is numeric.
TRACE_COLUMNS = [
    "t", "tick", "fsw_tick",
    "q0", "q1", "q2", "q3",
    "wx", "wy", "wz", "w_mag",
    "nutation", "m_prop", "p_tank", "t_tank",
    "slosh_phi", "slosh_m",
    "rate_err_mag", "pulse_count", "mdot",
    "seq_state", "ctrl_mode", "flags",
]

# Signals visible to the flight software (sequencer conditions evaluate
# on these; they come from sensors and FSW-internal state, never from
# plant truth).
FSW_SIGNALS = [
    "t", "t_in_mode",
    "wx", "wy", "wz", "w_mag", "w_spin",
    "rate_err_mag",
    "m_prop", "p_tank",
    "mib_flag",
]

# Unit suffixes accepted in sequence/monitor sources, with the factor
# converting the file value into SI.
UNIT_FACTORS = {
    "rad/s": 1.0,
    "deg/s": np.pi / 180.0,
    "rad": 1.0,
    "deg": np.pi / 180.0,
    "kg": 1.0,
    "pa": 1.0,
    "bar": 1.0e5,
    "s": 1.0,
    "k": 1.0,
}


def fsw_signal_names(separation_ids: list) -> list:
    """FSW-visible signal list for a scenario (adds chain-phase signals)."""
    return FSW_SIGNALS + [f"sep_{sid}_phase" for sid in separation_ids]


def trace_signal_names(separation_ids: list) -> list:
    """Signals monitors may reference: every numeric trace column."""
    cols = [c for c in TRACE_COLUMNS if c not in ("seq_state", "ctrl_mode")]
    return cols + [f"sep_{sid}_phase" for sid in separation_ids]


def format_value(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class TraceWriter:
    """Streams decimated telemetry rows to a delimited text file."""

    def __init__(self, path: str | Path, columns: list | None = None,
                 decimation: int = 1):
        self.path = Path(path)
        self.columns = list(columns or TRACE_COLUMNS)
        self.decimation = max(1, int(decimation))
        self._fh = open(self.path, "w", newline="")
        self._fh.write(",".join(self.columns) + "\n")
        self._count = 0

    def record(self, row: dict) -> None:
        if self._count % self.decimation == 0:
            self._fh.write(",".join(format_value(row[c]) for c in self.columns) + "\n")
        self._count += 1

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class Trace:
    """In-memory telemetry table: column name -> array (or string list)."""
    columns: dict = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        return self.columns["t"]

    def __len__(self) -> int:
        return len(self.columns["t"]) if self.columns else 0

    def signal(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(name)
        return self.columns[name]


def read_trace(path: str | Path) -> Trace:
    """Load a trace file back into arrays (strings stay as object arrays)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    cols = {}
    for i, name in enumerate(header):
        raw = [r[i] for r in rows]
        if name in ("seq_state", "ctrl_mode"):
            cols[name] = np.array(raw, dtype=object)
        else:
            cols[name] = np.array([float(x) for x in raw])
    return Trace(columns=cols)


class EventLog:
    """Timestamped run events (releases, faults, transitions, flags)."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self.events = []
        self._fh = open(self.path, "w") if self.path else None

    def append(self, t: float, kind: str, **data) -> None:
        # store JSON-safe values so events can be re-serialized anywhere
        # (trace sidecar, telemetry broadcast) without numpy leaking out
        entry = {"t": float(t), "kind": kind,
                 **{k: _to_plain(v) for k, v in data.items()}}
        self.events.append(entry)
        if self._fh:
            self._fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def close(self) -> None:
        if self._fh:
            self._fh.close()

    def of_kind(self, kind: str) -> list:
        return [e for e in self.events if e["kind"] == kind]


def _to_plain(obj):
    if isinstance(obj, np.ndarray):
        return [float(x) for x in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


def read_events(path: str | Path) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
