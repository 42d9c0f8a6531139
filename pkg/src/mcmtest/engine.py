"""Sequential Monte Carlo multiple testing with a guaranteed three-set result.

Each iteration draws new exceedance indicators, narrows every p-value's
confidence sequence and the threshold interval, and applies the procedure to
the interval endpoints:

* ``upper_set = h(lower p-value bounds, upper threshold bound)``
* ``lower_set = h(upper p-value bounds, lower threshold bound)``

For a monotonic procedure ``lower_set`` only grows and ``upper_set`` only
shrinks.  With probability at least ``1 - epsilon`` every hypothesis in
``lower_set`` is rejected and every one outside ``upper_set`` is not rejected
by the procedure applied to the true p-values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .confseq import LaiBank
from .datasrc import SourceExhausted
from .procedures import Procedure
from .thresholds import ThresholdInterval

__all__ = [
    "Decision",
    "EngineConfig",
    "EngineState",
    "StoppingRule",
    "parse_stopping",
    "run",
    "sandwich",
    "stop_fdr_additive",
    "stop_fdr_ratio",
]

POLICIES = ("uniform", "all")


@dataclass(frozen=True)
class StoppingRule:
    """``budget``, ``all-decided``, ``fdr-ratio`` (value = eta) or ``fdr-additive`` (value = xi)."""

    kind: str = "budget"
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("budget", "all-decided", "fdr-ratio", "fdr-additive"):
            raise ValueError(f"unknown stopping rule {self.kind!r}")
        if self.kind == "fdr-ratio" and (self.value is None or self.value < 1.0):
            raise ValueError("fdr-ratio needs eta >= 1")
        if self.kind == "fdr-additive" and (self.value is None or self.value < 0.0):
            raise ValueError("fdr-additive needs xi >= 0")

    def __str__(self) -> str:
        return self.kind if self.value is None else f"{self.kind}:{self.value:g}"


def parse_stopping(text: str) -> StoppingRule:
    """Parse ``budget``, ``all-decided``, ``fdr-ratio:<eta>`` or ``fdr-additive:<xi>``."""
    kind, _, value = text.partition(":")
    if kind in ("fdr-ratio", "fdr-additive"):
        if not value:
            raise ValueError(f"{kind} needs a value, e.g. {kind}:1.5")
        return StoppingRule(kind, float(value))
    if value:
        raise ValueError(f"{kind} takes no value")
    return StoppingRule(kind)


@dataclass
class EngineConfig:
    procedure: Procedure
    threshold: object
    epsilon: float
    budget: int | None = None
    stopping: StoppingRule = field(default_factory=StoppingRule)
    policy: str = "uniform"
    seed: int | None = None

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be non-negative")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        if isinstance(self.stopping, str):
            self.stopping = parse_stopping(self.stopping)
        if self.budget is None and self.stopping.kind == "budget":
            raise ValueError("a budget stopping rule needs a finite budget")

    @property
    def m(self) -> int:
        return self.procedure.m


@dataclass
class EngineState:
    """Snapshot after iteration ``n``; ``lower_set``/``upper_set`` are boolean masks."""

    n: int
    lower_set: np.ndarray
    upper_set: np.ndarray
    threshold: ThresholdInterval | None = None
    bank: LaiBank | None = None

    @property
    def undecided(self) -> np.ndarray:
        return self.upper_set & ~self.lower_set


def _sizes(state: EngineState) -> tuple[int, int]:
    return int(np.count_nonzero(state.lower_set)), int(np.count_nonzero(state.upper_set))


def stop_fdr_ratio(state: EngineState, eta) -> bool:
    """``|upper| / |lower| <= eta``, the ratio taken as 0 while ``lower`` is empty.

    The comparison is exact (rational arithmetic on the value of ``eta``).
    """
    eta = Fraction(eta)
    if eta < 1:
        raise ValueError("eta must be at least 1")
    lo, up = _sizes(state)
    ratio = Fraction(0) if lo == 0 else Fraction(up, lo)
    return ratio <= eta


def stop_fdr_additive(state: EngineState, xi) -> bool:
    """``(|upper| - |lower|) / |upper| <= xi``, taken as 0 while ``upper`` is empty."""
    xi = Fraction(xi)
    if xi < 0:
        raise ValueError("xi must be non-negative")
    lo, up = _sizes(state)
    frac = Fraction(0) if up == 0 else Fraction(up - lo, up)
    return frac <= xi


def _rule_fires(rule: StoppingRule, state: EngineState) -> bool:
    if rule.kind == "all-decided":
        return not state.undecided.any()
    if rule.kind == "fdr-ratio":
        return stop_fdr_ratio(state, rule.value)
    if rule.kind == "fdr-additive":
        return stop_fdr_additive(state, rule.value)
    return False


def sandwich(lower_p, upper_p, thr: ThresholdInterval, proc: Procedure) -> tuple[np.ndarray, np.ndarray]:
    """Rejections at the optimistic and pessimistic corners of the intervals.

    Returns ``(h(upper_p, thr.lo), h(lower_p, thr.hi))`` as index arrays.
    """
    lower_p = np.asarray(lower_p, dtype=np.float64)
    upper_p = np.asarray(upper_p, dtype=np.float64)
    if np.any(lower_p > upper_p):
        raise ValueError("lower_p must not exceed upper_p")
    return proc(upper_p, thr.lo), proc(lower_p, thr.hi)


@dataclass
class Decision:
    """Three-set outcome of a run; all index arrays are 0-based and sorted."""

    rejected: np.ndarray
    non_rejected: np.ndarray
    undecided: np.ndarray
    epsilon: float
    iterations: int
    samples: np.ndarray
    lower_p: np.ndarray
    upper_p: np.ndarray
    threshold: ThresholdInterval
    stopping_rule: str
    stopping_rule_fired: str | None
    truncated: bool
    clamped: int = 0
    procedure: str = ""
    threshold_model: str = ""

    @property
    def m(self) -> int:
        return self.samples.size

    @property
    def all_decided(self) -> bool:
        return self.undecided.size == 0

    def labels(self) -> np.ndarray:
        """Per-hypothesis call: 1 rejected, 0 non-rejected, -1 undecided."""
        out = np.full(self.m, -1, dtype=np.int8)
        out[self.rejected] = 1
        out[self.non_rejected] = 0
        return out


def run(config: EngineConfig, source, observer: Callable[[EngineState], None] | None = None) -> Decision:
    """Run the sequential algorithm until the stopping rule fires or the budget ends.

    ``observer`` (if given) is called with the :class:`EngineState` after every
    iteration; the state's arrays are live and must not be modified.
    """
    proc = config.procedure
    model = config.threshold
    m = proc.m
    if source.m != m:
        raise ValueError(f"source has {source.m} hypotheses, procedure expects {m}")
    if config.seed is not None and hasattr(source, "with_seed"):
        source = source.with_seed(config.seed)

    bank = LaiBank(m, model.stream_beta(config.epsilon, m))
    thr = model.start(m, config.epsilon, config.budget)
    lower = np.zeros(m, dtype=bool)
    upper = np.ones(m, dtype=bool)
    everyone = np.arange(m, dtype=np.int64)
    rule = config.stopping
    n = 0
    fired = None
    truncated = False
    clamped = 0

    while True:
        if config.budget is not None and n >= config.budget:
            if rule.kind == "budget":
                fired = "budget"
            else:
                truncated = True
            break
        if config.policy == "all":
            idx = everyone
        else:
            idx = np.flatnonzero(upper & ~lower)
            if idx.size == 0:
                # nothing left to sample; intervals and sets are frozen
                fired = "all-decided"
                break
        counter = bank.n[idx] + 1
        try:
            bits = source.draw_batch(idx, counter)
        except SourceExhausted:
            truncated = True
            break
        n += 1
        clamped += bank.update(idx, bits)
        thr = model.update(bank, thr, n)
        upper = proc.mask(bank.lower, thr.hi, check=False)
        lower = proc.mask(bank.upper, thr.lo, check=False)
        state = EngineState(n, lower, upper, thr, bank)
        if observer is not None:
            observer(state)
        if _rule_fires(rule, state):
            fired = rule.kind
            break

    return Decision(
        rejected=np.flatnonzero(lower),
        non_rejected=np.flatnonzero(~upper),
        undecided=np.flatnonzero(upper & ~lower),
        epsilon=config.epsilon,
        iterations=n,
        samples=bank.n.copy(),
        lower_p=bank.lower.copy(),
        upper_p=bank.upper.copy(),
        threshold=thr,
        stopping_rule=str(rule),
        stopping_rule_fired=fired,
        truncated=truncated,
        clamped=clamped,
        procedure=proc.label,
        threshold_model=getattr(model, "label", type(model).__name__),
    )
