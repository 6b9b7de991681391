"""Switchable test points: threshold and statistics monitors.

Monitors are pure functions of a telemetry trace; enabling or disabling
one can never affect another.  A threshold monitor opens a violation
when its condition has held continuously for the persistence time and
records when it opened, when it closed, and the signal peak over the
violating span.  A stats monitor reports mean/max/rms over sliding
windows plus whole-run values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import MonitorConfig
from ..telemetry import Trace


class UnknownSignal(KeyError):
    pass


_CMP = {"<": np.less, ">": np.greater, "<=": np.less_equal,
        ">=": np.greater_equal}


@dataclass
class Violation:
    t_open: float
    t_close: float
    peak: float


@dataclass
class StatsRecord:
    mean: float
    max: float
    rms: float
    windows: list = field(default_factory=list)  # (t_end, mean, max, rms)


@dataclass
class Monitor:
    id: str
    kind: str                   # threshold | stats
    signal: str
    comparator: str = ">"
    limit: float = 0.0
    persistence: float = 0.0
    window: float = 10.0
    outputs: tuple = ("mean", "max", "rms")
    requirements: tuple = ()
    enabled: bool = True

    @classmethod
    def from_config(cls, cfg: MonitorConfig) -> "Monitor":
        return cls(id=cfg.id, kind=cfg.kind, signal=cfg.signal,
                   comparator=cfg.comparator, limit=cfg.limit,
                   persistence=cfg.persistence, window=cfg.window,
                   outputs=tuple(cfg.outputs),
                   requirements=tuple(cfg.requirements), enabled=cfg.enabled)


@dataclass
class MonitorVerdict:
    monitor_id: str
    kind: str
    passed: bool
    violations: list = field(default_factory=list)
    stats: StatsRecord | None = None


def eval_monitor(monitor: Monitor, trace: Trace) -> MonitorVerdict:
    """Evaluate one monitor over a full trace."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    try:
        sig = trace.signal(monitor.signal)
    except KeyError:
        raise UnknownSignal(monitor.signal) from None
    t = trace.t

    if monitor.kind == "stats":
        stats = _stats(sig, t, monitor.window, monitor.outputs)
        return MonitorVerdict(monitor.id, "stats", passed=True, stats=stats)

    violations = _threshold_violations(sig, t, monitor.comparator,
                                       monitor.limit, monitor.persistence)
    return MonitorVerdict(monitor.id, "threshold",
                          passed=len(violations) == 0, violations=violations)


def _threshold_violations(sig: np.ndarray, t: np.ndarray, comparator: str,
                          limit: float, persistence: float) -> list:
    """Walk the persistence rule over the sampled trace.

    The hold timer accumulates the sample period on every violating sample
    (the first one included) and a violation opens at the sample where the
    accumulated hold reaches the persistence.
    """
    true_mask = _CMP[comparator](sig, limit)
    violations = []
    hold = 0.0
    open_idx = None   # index where the violation opened
    span_start = None  # first violating sample of the current span
    for i in range(len(sig)):
        dt = t[i] - t[i - 1] if i > 0 else (t[1] - t[0] if len(t) > 1 else 0.0)
        if true_mask[i]:
            if span_start is None:
                span_start = i
            hold += dt
            if open_idx is None and hold + 1e-9 >= persistence:
                open_idx = i
        else:
            if open_idx is not None:
                peak = _peak(sig[span_start:i], comparator)
                violations.append(Violation(t_open=float(t[open_idx]),
                                            t_close=float(t[i]), peak=peak))
            hold = 0.0
            open_idx = None
            span_start = None
    if open_idx is not None:
        peak = _peak(sig[span_start:], comparator)
        violations.append(Violation(t_open=float(t[open_idx]),
                                    t_close=float(t[-1]), peak=peak))
    return violations


def _peak(window: np.ndarray, comparator: str) -> float:
    return float(np.min(window)) if comparator in ("<", "<=") \
        else float(np.max(window))


def _stats(sig: np.ndarray, t: np.ndarray, window: float,
           outputs: tuple) -> StatsRecord:
    rec = StatsRecord(mean=float(np.mean(sig)), max=float(np.max(sig)),
                      rms=float(np.sqrt(np.mean(sig ** 2))))
    if len(t) > 1 and window > 0.0:
        dt = float(t[1] - t[0])
        n_win = max(1, int(round(window / dt)))
        for end in range(n_win, len(sig) + 1, n_win):
            chunk = sig[end - n_win:end]
            rec.windows.append((float(t[end - 1]), float(np.mean(chunk)),
                                float(np.max(chunk)),
                                float(np.sqrt(np.mean(chunk ** 2)))))
    return rec
