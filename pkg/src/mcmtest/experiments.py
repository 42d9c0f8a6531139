"""Repeated-run experiments: naive fixed-sample testing versus the sequential engine.

Randomness across repetitions comes only from the Monte Carlo draws; the
underlying p-values stay fixed.  Instability is measured by ``rc``, the number
of hypotheses whose call is each of significant and non-significant with
empirical frequency above a cutoff.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .datasrc import SyntheticSource
from .engine import EngineConfig, StoppingRule, run
from .procedures import Procedure

__all__ = [
    "ExperimentSpec",
    "RepSummary",
    "Scenario",
    "exceedance_counts",
    "naive_method",
    "parse_law",
    "rc_metric",
    "run_improved",
    "run_naive",
]

SIGNIFICANT, NON_SIGNIFICANT, UNDECIDED = 1, 0, -1


def parse_law(text: str):
    """Parse ``uniform:a:b``, ``beta:a:b`` or ``point:v`` into a sampler ``(rng, size) -> array``."""
    name, *args = text.split(":")
    try:
        vals = [float(a) for a in args]
    except ValueError as exc:
        raise ValueError(f"bad law {text!r}") from exc
    if name == "uniform" and len(vals) == 2 and 0.0 <= vals[0] <= vals[1] <= 1.0:
        return lambda rng, size: rng.uniform(vals[0], vals[1], size)
    if name == "beta" and len(vals) == 2 and min(vals) > 0:
        return lambda rng, size: rng.beta(vals[0], vals[1], size)
    if name == "point" and len(vals) == 1 and 0.0 <= vals[0] <= 1.0:
        return lambda rng, size: np.full(size, vals[0])
    raise ValueError(f"bad law {text!r}; use uniform:a:b, beta:a:b or point:v")


@dataclass
class Scenario:
    """Synthetic p-values: ``null_frac * m`` nulls, the rest alternatives."""

    m: int = 200
    null_frac: float = 0.5
    alt_law: str = "uniform:0:0.001"
    null_law: str = "uniform:0.2:1"
    seed: int = 0

    def p_star(self) -> np.ndarray:
        if self.m < 1 or not 0.0 <= self.null_frac <= 1.0:
            raise ValueError("need m >= 1 and null_frac in [0, 1]")
        rng = np.random.default_rng(self.seed)
        n_null = int(round(self.null_frac * self.m))
        alt = parse_law(self.alt_law)(rng, self.m - n_null)
        null = parse_law(self.null_law)(rng, n_null)
        return np.concatenate([alt, null])


@dataclass
class ExperimentSpec:
    scenario: Scenario
    method: str  # "naive:<s>" or "improved"
    reps: int = 100
    rc_cutoff: float = 0.01

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not 0.0 < self.rc_cutoff < 1.0:
            raise ValueError("rc_cutoff must lie in (0, 1)")


def exceedance_counts(source: SyntheticSource, s: int) -> np.ndarray:
    """Number of exceedances among the first ``s`` draws of every hypothesis."""
    m = source.m
    idx = np.repeat(np.arange(m, dtype=np.int64), s)
    counter = np.tile(np.arange(1, s + 1, dtype=np.int64), m)
    return source.draw_batch(idx, counter).reshape(m, s).sum(axis=1)


def naive_method(counts, s: int, procedure: Procedure, threshold_model, estimator: str = "plain") -> np.ndarray:
    """Classify from point estimates after ``s`` samples per hypothesis.

    ``estimator="plain"`` uses ``S_i/s``; ``"plus-one"`` uses ``(S_i+1)/(s+1)``.
    The threshold is the model's point value at the estimates.
    """
    if s < 1:
        raise ValueError("s must be positive")
    counts = np.asarray(counts, dtype=np.float64)
    if estimator == "plain":
        p_hat = counts / s
    elif estimator == "plus-one":
        p_hat = (counts + 1.0) / (s + 1.0)
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    return procedure(p_hat, threshold_model.point(p_hat))


def rc_metric(calls, cutoff: float = 0.01) -> tuple[int, np.ndarray]:
    """Count randomly classified hypotheses.

    ``calls`` is a ``(reps, m)`` array of 1 (significant), 0 (non-significant)
    or -1 (undecided; counts toward neither frequency).  Returns ``rc`` and the
    per-hypothesis ``min(freq significant, freq non-significant)``.
    """
    calls = np.atleast_2d(np.asarray(calls))
    reps = calls.shape[0]
    if reps < 1:
        raise ValueError("need at least one repetition")
    p_sig = np.count_nonzero(calls == SIGNIFICANT, axis=0) / reps
    p_non = np.count_nonzero(calls == NON_SIGNIFICANT, axis=0) / reps
    p_r = np.minimum(p_sig, p_non)
    return int(np.count_nonzero(p_r > cutoff)), p_r


@dataclass
class RepSummary:
    calls: np.ndarray
    rc: int
    p_r: np.ndarray
    rejected: np.ndarray = field(default=None)
    non_rejected: np.ndarray = field(default=None)
    undecided: np.ndarray = field(default=None)

    def means(self) -> dict:
        return {
            "rejected": float(np.mean(self.rejected)),
            "non_rejected": float(np.mean(self.non_rejected)),
            "undecided": float(np.mean(self.undecided)),
            "rc": self.rc,
        }


def _summarise(calls: np.ndarray, cutoff: float) -> RepSummary:
    rc, p_r = rc_metric(calls, cutoff)
    return RepSummary(
        calls=calls,
        rc=rc,
        p_r=p_r,
        rejected=np.count_nonzero(calls == SIGNIFICANT, axis=1),
        non_rejected=np.count_nonzero(calls == NON_SIGNIFICANT, axis=1),
        undecided=np.count_nonzero(calls == UNDECIDED, axis=1),
    )


def _map(fn, items, workers: int):
    """``[fn(x) for x in items]``, optionally spread over worker processes."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _naive_rep(seed, *, base, s, procedure, threshold_model, estimator):
    counts = exceedance_counts(base.with_seed(seed), s)
    call = np.zeros(base.m, dtype=np.int8)
    call[naive_method(counts, s, procedure, threshold_model, estimator)] = SIGNIFICANT
    return call


def _improved_rep(seed, *, base, budget, procedure, threshold_model, epsilon, policy):
    cfg = EngineConfig(
        procedure=procedure,
        threshold=threshold_model,
        epsilon=epsilon,
        budget=budget,
        stopping=StoppingRule("all-decided"),
        policy=policy,
    )
    return run(cfg, base.with_seed(seed)).labels()


def run_naive(p_star, s: int, procedure: Procedure, threshold_model, seeds, cutoff: float = 0.01,
              estimator: str = "plain", workers: int = 1) -> RepSummary:
    """Naive fixed-``s`` classification repeated once per seed."""
    fn = partial(_naive_rep, base=SyntheticSource(p_star), s=s, procedure=procedure,
                 threshold_model=threshold_model, estimator=estimator)
    calls = np.array(_map(fn, seeds, workers), dtype=np.int8).reshape(len(seeds), -1)
    return _summarise(calls, cutoff)


def run_improved(p_star, budget: int, procedure: Procedure, threshold_model, epsilon: float, seeds,
                 cutoff: float = 0.01, policy: str = "all", workers: int = 1) -> RepSummary:
    """Sequential runs stopped after ``budget`` samples per hypothesis.

    The run also ends once nothing is undecided; sets are frozen from then on,
    so the three-set result equals that of a full-budget run.
    """
    fn = partial(_improved_rep, base=SyntheticSource(p_star), budget=budget, procedure=procedure,
                 threshold_model=threshold_model, epsilon=epsilon, policy=policy)
    calls = np.array(_map(fn, seeds, workers), dtype=np.int8).reshape(len(seeds), -1)
    return _summarise(calls, cutoff)
