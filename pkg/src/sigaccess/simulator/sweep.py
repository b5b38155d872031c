"""Replicated runs with per-metric means and 95% confidence half-widths."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from sigaccess.simulator import run
from sigaccess.simulator.config import AccessMetrics, ScenarioConfig

# metrics summarized with a mean and CI; the rest are summed
CI_METRICS = ("goodput", "reliability", "mean_latency", "mean_messages")
SUM_METRICS = ("false_positive_count", "collision_count", "arrivals", "successes", "failures", "in_progress")


class SweepError(RuntimeError):
    """A run failed; carries the offending config and replication."""

    def __init__(self, config: ScenarioConfig, replication: int, cause: BaseException):
        super().__init__(f"run failed for {config} (replication {replication}): {cause!r}")
        self.config = config
        self.replication = replication


@dataclass
class Estimate:
    mean: float
    ci95: float  # half-width; NaN with a single replication
    n: int

    @property
    def degenerate(self) -> bool:
        return self.n < 2


@dataclass
class SweepResult:
    config: ScenarioConfig
    runs: list[AccessMetrics]
    estimates: dict[str, Estimate] = field(default_factory=dict)
    totals: dict[str, int] = field(default_factory=dict)
    L: int | None = None

    @property
    def replications(self) -> int:
        return len(self.runs)


def replication_seed(base: int, r: int) -> int:
    """Seed of replication r, derived from the base seed alone."""
    return int(np.random.SeedSequence(base, spawn_key=(r,)).generate_state(1, np.uint64)[0])


def estimate(values) -> Estimate:
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n == 0:
        return Estimate(math.nan, math.nan, 0)
    mean = float(x.mean())
    if n < 2:
        return Estimate(mean, math.nan, n)
    half = float(stats.t.ppf(0.975, n - 1) * x.std(ddof=1) / math.sqrt(n))
    return Estimate(mean, half, n)


def aggregate(config: ScenarioConfig, runs: list[AccessMetrics]) -> SweepResult:
    res = SweepResult(config, runs)
    for name in CI_METRICS:
        res.estimates[name] = estimate([getattr(m, name) for m in runs])
    for name in SUM_METRICS:
        res.totals[name] = int(sum(getattr(m, name) for m in runs))
    if config.protocol == "signature" and runs:
        res.L = runs[0].L
    return res


def _job(args):
    config, r = args
    try:
        return run(config)
    except Exception as e:  # re-raised with context in the parent
        raise SweepError(config, r, e) from e


def sweep(configs, replications: int = 1, workers: int = 1) -> list[SweepResult]:
    """Run every (config, replication) pair; results follow config order."""
    if replications < 1:
        raise ValueError("need at least one replication")
    configs = list(configs)
    jobs = [(c.with_(seed=replication_seed(c.seed, r)), r) for c in configs for r in range(replications)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_job, jobs))
    else:
        out = [_job(j) for j in jobs]
    return [
        aggregate(c, out[i * replications : (i + 1) * replications])
        for i, c in enumerate(configs)
    ]
