"""Intervals for the testing threshold.

The threshold is either a known constant or the Pounds-Cheng corrected level
``t_star / pi0_hat(p)`` with ``pi0_hat(p) = min(1, 2 * mean(p))``.  Because
``pi0_hat`` is non-decreasing in every ``p_i``, bounds on the p-values (or a
bound on their mean) translate directly into bounds on the threshold.

Division by a zero proportion estimate yields ``math.inf`` as upper bound.
Procedures clamp thresholds above 1 to 1 when evaluating critical values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .confseq import HoeffdingState, eta_schedule

__all__ = [
    "FixedThreshold",
    "PoundsChengHoeffding",
    "PoundsChengPlugin",
    "ThresholdInterval",
    "hoeffding_threshold_interval",
    "make_threshold_model",
    "mean_to_threshold",
    "pi0_hat",
    "plugin_interval",
]


def pi0_hat(p) -> float:
    """Pounds-Cheng estimate of the proportion of true nulls."""
    p = np.asarray(p, dtype=np.float64)
    return min(1.0, 2.0 * float(np.mean(p)))


def _div(t_star: float, pi: float) -> float:
    return math.inf if pi <= 0.0 else t_star / pi


@dataclass(frozen=True)
class ThresholdInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("threshold interval with lo > hi")

    def intersect(self, other: "ThresholdInterval") -> "ThresholdInterval":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            # disjoint: keep the endpoint of ``other`` nearest to ``self``
            lo = hi = other.lo if self.hi < other.lo else other.hi
        return ThresholdInterval(lo, hi)

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


REAL_LINE = ThresholdInterval(-math.inf, math.inf)


def plugin_interval(lower_p, upper_p, t_star: float) -> ThresholdInterval:
    """``[t*/pi0_hat(upper_p), t*/pi0_hat(lower_p)]`` from p-value bounds."""
    lower_p = np.asarray(lower_p, dtype=np.float64)
    upper_p = np.asarray(upper_p, dtype=np.float64)
    if np.any(lower_p > upper_p):
        raise ValueError("lower_p must not exceed upper_p")
    return ThresholdInterval(_div(t_star, pi0_hat(upper_p)), _div(t_star, pi0_hat(lower_p)))


def mean_to_threshold(a: float, b: float, t_star: float) -> ThresholdInterval:
    """Map an interval ``[a, b]`` for the mean p-value to one for the threshold."""
    return ThresholdInterval(_div(t_star, min(1.0, 2.0 * b)), _div(t_star, min(1.0, 2.0 * a)))


def hoeffding_threshold_interval(
    hstate: HoeffdingState,
    n: np.ndarray,
    s: np.ndarray,
    t_star: float,
    eta_n: float,
    previous: ThresholdInterval = REAL_LINE,
) -> ThresholdInterval:
    """Spend ``eta_n`` on a Hoeffding interval for the mean p-value, map it, and
    intersect with ``previous``."""
    a, b = hstate.update(n, s, eta_n)
    return mean_to_threshold(a, b, t_star).intersect(previous)


class FixedThreshold:
    """Known constant threshold; no error budget spent."""

    label = "fixed"

    def __init__(self, alpha: float):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        self.alpha = float(alpha)

    def stream_beta(self, epsilon: float, m: int) -> float:
        return epsilon / m

    def start(self, m: int, epsilon: float, horizon: int | None) -> ThresholdInterval:
        return ThresholdInterval(self.alpha, self.alpha)

    def update(self, bank, previous: ThresholdInterval, n: int) -> ThresholdInterval:
        return previous

    def point(self, p) -> float:
        return self.alpha


class PoundsChengPlugin:
    """Pounds-Cheng threshold bounded by plugging in the p-value intervals.

    Inherits its validity from the p-value sequences, so each of the ``m``
    streams gets ``epsilon/m``.
    """

    label = "pc-plugin"

    def __init__(self, t_star: float):
        if not 0.0 < t_star <= 1.0:
            raise ValueError("t_star must lie in (0, 1]")
        self.t_star = float(t_star)

    def stream_beta(self, epsilon: float, m: int) -> float:
        return epsilon / m

    def start(self, m: int, epsilon: float, horizon: int | None) -> ThresholdInterval:
        return REAL_LINE

    def update(self, bank, previous: ThresholdInterval, n: int) -> ThresholdInterval:
        return plugin_interval(bank.lower, bank.upper, self.t_star).intersect(previous)

    def point(self, p) -> float:
        return _div(self.t_star, pi0_hat(p))


class PoundsChengHoeffding:
    """Pounds-Cheng threshold bounded through a Hoeffding interval on the mean.

    ``epsilon/(m+1)`` goes to each p-value stream and ``epsilon/(m+1)`` in total
    to the Hoeffding intervals, spread over iterations by ``eta_schedule``
    with horizon ``s`` (the run's budget, or ``default_horizon`` if the run is
    open-ended).
    """

    label = "pc-hoeffding"

    def __init__(self, t_star: float, default_horizon: int = 1000):
        if not 0.0 < t_star <= 1.0:
            raise ValueError("t_star must lie in (0, 1]")
        self.t_star = float(t_star)
        self.default_horizon = int(default_horizon)
        self._hstate = None

    def stream_beta(self, epsilon: float, m: int) -> float:
        return epsilon / (m + 1)

    def start(self, m: int, epsilon: float, horizon: int | None) -> ThresholdInterval:
        self._m = m
        self._epsilon = epsilon
        self._horizon = horizon if horizon else self.default_horizon
        self._hstate = HoeffdingState(m=m, eta_total=epsilon / (m + 1))
        return REAL_LINE

    def update(self, bank, previous: ThresholdInterval, n: int) -> ThresholdInterval:
        eta_n = eta_schedule(n, self._horizon, self._epsilon, self._m)
        return hoeffding_threshold_interval(self._hstate, bank.n, bank.s, self.t_star, eta_n, previous)

    @property
    def hoeffding_state(self) -> HoeffdingState | None:
        return self._hstate

    def point(self, p) -> float:
        return _div(self.t_star, pi0_hat(p))


def make_threshold_model(kind: str, alpha: float, **kwargs):
    """Factory keyed by the CLI names ``fixed``, ``pc-plugin``, ``pc-hoeffding``."""
    if kind == "fixed":
        return FixedThreshold(alpha)
    if kind == "pc-plugin":
        return PoundsChengPlugin(alpha)
    if kind == "pc-hoeffding":
        return PoundsChengHoeffding(alpha, **kwargs)
    raise ValueError(f"unknown threshold model {kind!r}")
