"""Cross-entropy worst-case search over the scenario parameter space.

Standard CE with a truncated Gaussian sampling distribution: fit mean and
per-dimension sigma to the elite fraction with smoothing, stop when every
sigma has collapsed below sigma_min relative to its parameter range.  The
core optimizer is decoupled from the simulator so it can be exercised on
closed-form objectives; the campaign wrapper evaluates samples exactly
like Monte Carlo does.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .campaign import (CampaignResult, evaluate_sample, split_seed,
                       truncated_gaussian)


@dataclass
class CEOptions:
    population: int = 50
    elite_frac: float = 0.1
    smoothing: float = 0.7
    max_iters: int = 20
    sigma_min: float = 0.01

    def __post_init__(self):
        if self.population * self.elite_frac < 2.0:
            raise ValueError("population * elite_frac must be >= 2")


@dataclass
class CEIteration:
    iteration: int
    mu: list
    sigma: list
    iter_best: float
    best_ever: float


def cross_entropy_maximize(fn, bounds: list, options: CEOptions,
                           seed: int = 0) -> tuple:
    """Maximize fn over a box; returns (best_x, best_f, iteration trace).

    fn maps a parameter vector (np.ndarray) to a scalar; every evaluated
    point lies inside the declared bounds (truncated sampling).
    """
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    span = hi - lo
    mu = 0.5 * (lo + hi)
    sigma = span / 3.0
    n_elite = int(np.ceil(options.elite_frac * options.population))

    best_x, best_f = None, -np.inf
    trace = []
    eval_index = 0
    for it in range(options.max_iters):
        rng = np.random.default_rng(split_seed(seed, it))
        xs = np.empty((options.population, len(bounds)))
        fs = np.empty(options.population)
        for i in range(options.population):
            x = np.array([truncated_gaussian(rng, mu[d], max(sigma[d], 1e-12),
                                             lo[d], hi[d])
                          for d in range(len(bounds))])
            xs[i] = x
            fs[i] = fn(x)
            eval_index += 1
        order = np.argsort(fs)[::-1]
        elites = xs[order[:n_elite]]
        iter_best_i = int(order[0])
        if fs[iter_best_i] > best_f:
            best_f = float(fs[iter_best_i])
            best_x = xs[iter_best_i].copy()
        alpha = options.smoothing
        mu = alpha * elites.mean(axis=0) + (1.0 - alpha) * mu
        sigma = alpha * elites.std(axis=0) + (1.0 - alpha) * sigma
        trace.append(CEIteration(iteration=it, mu=[float(v) for v in mu],
                                 sigma=[float(v) for v in sigma],
                                 iter_best=float(fs[iter_best_i]),
                                 best_ever=best_f))
        if np.max(sigma / span) < options.sigma_min:
            break
    return best_x, best_f, trace


def ce_search(raw: dict, base_dir, space: list, objective: str,
              options: CEOptions, master_seed: int,
              duration: float) -> CampaignResult:
    """CE maximization of a telemetry functional over scenario parameters."""
    bounds = [(p.lower, p.upper) for p in space]
    t0 = time.monotonic()
    samples: list = []
    counter = {"i": 0}

    def fn(x: np.ndarray) -> float:
        i = counter["i"]
        counter["i"] += 1
        params = {p.name: float(x[d]) for d, p in enumerate(space)}
        rec = evaluate_sample(raw, base_dir, params, space,
                              run_seed=split_seed(master_seed, 1_000_000 + i),
                              duration=duration, objective=objective)
        rec.index = i
        samples.append(rec)
        return rec.objective if np.isfinite(rec.objective) else -np.inf

    _, _, trace = cross_entropy_maximize(fn, bounds, options, seed=master_seed)
    finite = [(s.objective, i) for i, s in enumerate(samples)
              if np.isfinite(s.objective)]
    best_index = max(finite)[1] if finite else -1
    iterations = [{"iteration": it.iteration, "mu": it.mu, "sigma": it.sigma,
                   "iter_best": it.iter_best, "best_ever": it.best_ever}
                  for it in trace]
    return CampaignResult(kind="ce", n=len(samples), master_seed=master_seed,
                          objective=objective, duration=duration,
                          samples=samples, iterations=iterations,
                          best_index=best_index, elapsed=time.monotonic() - t0)
