"""Registry of named telemetry functionals for campaigns and CE search."""

from __future__ import annotations

import numpy as np


def _max_nutation(result) -> float:
    return float(np.max(result.trace.signal("nutation")))


def _max_rate_error(result) -> float:
    return float(np.max(result.trace.signal("rate_err_mag")))


def _propellant_consumed(result) -> float:
    m = result.trace.signal("m_prop")
    return float(m[0] - m[-1])


def _pulse_count(result) -> float:
    return float(result.pulse_count)


def _max_rate(result) -> float:
    return float(np.max(result.trace.signal("w_mag")))


OBJECTIVES = {
    "max_nutation": _max_nutation,
    "max_rate_error": _max_rate_error,
    "propellant_consumed": _propellant_consumed,
    "pulse_count": _pulse_count,
    "max_rate": _max_rate,
}


def objective_value(name: str, result) -> float:
    if name not in OBJECTIVES:
        raise KeyError(f"unknown objective {name!r}; "
                       f"known: {', '.join(sorted(OBJECTIVES))}")
    return OBJECTIVES[name](result)
