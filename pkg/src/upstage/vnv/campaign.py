"""Monte Carlo campaigns with documented deterministic seeding.

Seed splitting uses the splitmix64 finalizer over
``master + (index + 1) * 0x9E3779B97F4A7C15`` (all mod 2^64), so sample
i's seed is stable under changes of the campaign size and independent of
evaluation order.  Every sample runs with its own RNG; failures are
recorded per sample and never abort the campaign.
"""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config import validate_scenario
from ..plant import NumericalDivergence
from ..simloop import run_scenario
from .monitors import Monitor, eval_monitor
from .objectives import objective_value

_GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


def split_seed(master: int, index: int) -> int:
    """splitmix64(master + (index+1) * golden gamma), the documented split."""
    z = (master + (index + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def sample_params(space: list, rng: np.random.Generator) -> dict:
    """Draw one parameter vector, in declared order."""
    out = {}
    for p in space:
        if p.distribution == "uniform":
            out[p.name] = float(rng.uniform(p.lower, p.upper))
        else:
            out[p.name] = truncated_gaussian(rng, p.mean, p.sigma,
                                             p.lower, p.upper)
    return out


def truncated_gaussian(rng: np.random.Generator, mean: float, sigma: float,
                       lower: float, upper: float, max_tries: int = 10_000) -> float:
    for _ in range(max_tries):
        x = float(rng.normal(mean, sigma))
        if lower <= x <= upper:
            return x
    return float(min(max(mean, lower), upper))


def set_path(node, dotted: str, value) -> None:
    """Assign a value at a dotted path (numeric segments index arrays)."""
    segments = dotted.split(".")
    for seg in segments[:-1]:
        node = node[int(seg)] if isinstance(node, list) else node[seg]
    last = segments[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


@dataclass
class SampleRecord:
    index: int
    seed: int
    params: dict
    objective: float
    status: str                         # ok | diverged | error:<...>
    monitor_verdicts: dict = field(default_factory=dict)  # id -> passed

    def to_dict(self) -> dict:
        return {"index": self.index, "seed": self.seed, "params": self.params,
                "objective": self.objective, "status": self.status,
                "monitor_verdicts": self.monitor_verdicts}


@dataclass
class CampaignResult:
    kind: str
    n: int
    master_seed: int
    objective: str
    duration: float
    samples: list
    iterations: list = field(default_factory=list)   # CE only
    best_index: int = -1
    elapsed: float | None = None   # wall time; excluded from artifacts

    @property
    def best(self) -> SampleRecord | None:
        return self.samples[self.best_index] if self.best_index >= 0 else None

    def to_dict(self) -> dict:
        # elapsed intentionally omitted: artifacts must be byte-identical
        # across reruns with the same seed
        return {"kind": self.kind, "n": self.n, "master_seed": self.master_seed,
                "objective": self.objective, "duration": self.duration,
                "best_index": self.best_index,
                "iterations": self.iterations,
                "samples": [s.to_dict() for s in self.samples]}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2,
                                         sort_keys=True) + "\n")


def load_campaign(path: str | Path) -> CampaignResult:
    d = json.loads(Path(path).read_text())
    samples = [SampleRecord(**s) for s in d["samples"]]
    return CampaignResult(kind=d["kind"], n=d["n"], master_seed=d["master_seed"],
                          objective=d["objective"], duration=d["duration"],
                          samples=samples, iterations=d.get("iterations", []),
                          best_index=d["best_index"])


def evaluate_sample(raw: dict, base_dir, params: dict, space: list,
                    run_seed: int, duration: float, objective: str) -> SampleRecord:
    """One fully deterministic sample run; failures become run status."""
    sample_raw = copy.deepcopy(raw)
    for p in space:
        set_path(sample_raw, p.path, params[p.name])
    record = SampleRecord(index=-1, seed=run_seed, params=params,
                          objective=float("nan"), status="ok")
    try:
        scenario = validate_scenario(sample_raw, base_dir=base_dir)
        result = run_scenario(scenario, duration=duration, seed=run_seed)
        record.objective = objective_value(objective, result)
        if result.diverged:
            record.status = "diverged"
        for mcfg in scenario.monitors:
            mon = Monitor.from_config(mcfg)
            if not mon.enabled:
                continue
            verdict = eval_monitor(mon, result.trace)
            record.monitor_verdicts[mon.id] = verdict.passed
    except NumericalDivergence:
        record.status = "diverged"
    except Exception as exc:  # config or runtime failure: recorded, not fatal
        record.status = f"error:{type(exc).__name__}"
    return record


def run_monte_carlo(raw: dict, base_dir, space: list, n: int,
                    master_seed: int, duration: float,
                    objective: str) -> CampaignResult:
    """n independent samples; bit-identical given (config, master seed)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    t0 = time.monotonic()
    samples = []
    for i in range(n):
        seed_i = split_seed(master_seed, i)
        param_rng = np.random.default_rng(split_seed(seed_i, 0))
        params = sample_params(space, param_rng)
        rec = evaluate_sample(raw, base_dir, params, space,
                              run_seed=split_seed(seed_i, 1),
                              duration=duration, objective=objective)
        rec.index = i
        samples.append(rec)
    finite = [(s.objective, i) for i, s in enumerate(samples)
              if np.isfinite(s.objective)]
    best_index = max(finite)[1] if finite else -1
    return CampaignResult(kind="mc", n=n, master_seed=master_seed,
                          objective=objective, duration=duration,
                          samples=samples, best_index=best_index,
                          elapsed=time.monotonic() - t0)
