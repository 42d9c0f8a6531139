"""Anytime-valid confidence intervals for Bernoulli proportions.

Two constructions are provided:

* Lai's confidence sequence for a single exceedance probability.  At sample
  size ``n`` with ``x`` successes the interval is the set of ``p`` where
  ``(n+1) * C(n, x) * p**x * (1-p)**(n-x) > beta``; intersected over ``n``
  the intervals cover ``p`` at all times with probability at least
  ``1 - beta``.
* A Hoeffding interval for the mean of all exceedance probabilities, with the
  error budget spread over iterations by :func:`eta_schedule`.

:class:`LaiBank` holds the state of many sequences at once and is what the
engine uses; :class:`ConfSeqState` is the single-stream value type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln

from ._backend import kernels

__all__ = [
    "ConfSeqState",
    "HoeffdingState",
    "LaiBank",
    "confseq_update",
    "eta_schedule",
    "hoeffding_interval",
    "lai_kernel",
    "lai_log_kernel",
    "lai_roots",
    "nu_schedule",
]


def lai_log_kernel(n: int, x: int, p: float) -> float:
    """Natural log of ``(n+1) * C(n, x) * p**x * (1-p)**(n-x)``."""
    return kernels.log_kernel(int(n), int(x), float(p))


def lai_kernel(n: int, x: int, p: float) -> float:
    return math.exp(lai_log_kernel(n, x, p))


def lai_roots(n: int, x: int, beta: float) -> tuple[float, float]:
    """Endpoints ``(g, f)`` of the Lai interval after ``x`` successes in ``n``.

    ``g`` and ``f`` are the two solutions of ``kernel(p) = beta``; for
    ``x == 0`` (``x == n``) the kernel is monotone and the lower (upper)
    endpoint is 0 (1).  If the kernel never exceeds ``beta`` the vacuous
    interval ``(0, 1)`` is returned.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 <= x <= n:
        raise ValueError("x must lie in [0, n]")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    return kernels.lai_roots(int(n), int(x), float(beta))


@dataclass(frozen=True)
class ConfSeqState:
    """One Lai confidence sequence: counts plus the running intersection."""

    beta: float
    n: int = 0
    s_n: int = 0
    lower: float = 0.0
    upper: float = 1.0
    clamped: bool = False

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if not 0 <= self.s_n <= self.n:
            raise ValueError("need 0 <= s_n <= n")

    @property
    def interval(self) -> tuple[float, float]:
        return (self.lower, self.upper)


def confseq_update(state: ConfSeqState, outcome: int) -> ConfSeqState:
    """Add one Bernoulli observation and intersect with the fresh Lai interval.

    If the fresh interval misses the stored one (only possible off the coverage
    event, or through rounding) the result collapses to the stored endpoint
    nearest the fresh interval and ``clamped`` is set.
    """
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    n = state.n + 1
    s_n = state.s_n + int(outcome)
    g, f = kernels.lai_roots(n, s_n, state.beta)
    if f < state.lower:
        lo = hi = state.lower
        clamped = True
    elif g > state.upper:
        lo = hi = state.upper
        clamped = True
    else:
        lo, hi = max(g, state.lower), min(f, state.upper)
        clamped = state.clamped
    return replace(state, n=n, s_n=s_n, lower=lo, upper=hi, clamped=clamped)


def log_factorials(size: int) -> np.ndarray:
    """``log(k!)`` for ``k = 0..size-1``."""
    return gammaln(np.arange(size, dtype=np.float64) + 1.0)


class LaiBank:
    """Lai confidence sequences for ``m`` streams sharing one ``beta``.

    Arrays are exposed directly (``n``, ``s``, ``lower``, ``upper``,
    ``clamped``) for cheap read access; mutate only through :meth:`update`.
    """

    def __init__(self, m: int, beta: float):
        if not 0.0 < beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        self.m = int(m)
        self.beta = float(beta)
        self._log_beta = math.log(beta)
        self.n = np.zeros(m, dtype=np.int64)
        self.s = np.zeros(m, dtype=np.int64)
        self.lower = np.zeros(m, dtype=np.float64)
        self.upper = np.ones(m, dtype=np.float64)
        self.clamped = np.zeros(m, dtype=np.uint8)
        self._logfact = log_factorials(1024)

    def update(self, idx: np.ndarray, bits: np.ndarray) -> int:
        """Record one observation ``bits[k]`` for each stream ``idx[k]``.

        Returns the number of empty-intersection collapses in this update.
        """
        idx = np.ascontiguousarray(idx, dtype=np.int64)
        self.n[idx] += 1
        self.s[idx] += bits
        need = int(self.n.max()) + 2
        if need > self._logfact.size:
            self._logfact = log_factorials(max(need, 2 * self._logfact.size))
        return kernels.lai_update(
            self.n, self.s, self.lower, self.upper, self._log_beta, idx, self.clamped,
            self._logfact,
        )

    def state(self, i: int) -> ConfSeqState:
        return ConfSeqState(
            beta=self.beta,
            n=int(self.n[i]),
            s_n=int(self.s[i]),
            lower=float(self.lower[i]),
            upper=float(self.upper[i]),
            clamped=bool(self.clamped[i]),
        )


def hoeffding_interval(total_successes: int, total_samples: int, eta_n: float) -> tuple[float, float]:
    """Two-sided ``1 - eta_n`` Hoeffding interval for a pooled Bernoulli mean.

    Half-width is ``sqrt(-log(eta_n / 2) / (2 * total_samples))``; the result is
    clipped to ``[0, 1]``.  ``eta_n >= 2`` gives a zero half-width.
    """
    if total_samples < 1:
        raise ValueError("total_samples must be positive")
    if eta_n <= 0.0:
        raise ValueError("eta_n must be positive")
    mean = total_successes / total_samples
    u = math.sqrt(max(0.0, -math.log(eta_n / 2.0)) / (2.0 * total_samples))
    return max(0.0, mean - u), min(1.0, mean + u)


def nu_schedule(n: int, s: int, budget: float) -> float:
    """Cumulative Hoeffding error spent after ``n`` iterations: ``n/(n+s) * budget``."""
    return n / (n + s) * budget


def eta_schedule(n: int, s: int, epsilon: float, m: int) -> float:
    """Error allotted to the Hoeffding interval in iteration ``n``.

    Differences of ``nu_n = n/(n+s) * epsilon/(m+1)``; the partial sums stay
    strictly below ``epsilon/(m+1)`` for every ``n``.
    """
    if n < 1 or s < 1:
        raise ValueError("n and s must be positive")
    budget = epsilon / (m + 1)
    # closed form of nu_n - nu_{n-1}, avoids cancellation for large n
    return budget * s / ((n + s) * (n - 1 + s))


@dataclass
class HoeffdingState:
    """Aggregate exceedance counts for the mean of all p-values.

    When every stream has the same sample count the interval is exactly
    :func:`hoeffding_interval` on the pooled counts.  With unequal counts the
    target is still the unweighted mean ``(1/m) sum_i p_i``: the estimator is
    the mean of per-stream proportions, and the half-width uses the
    Hoeffding variance proxy ``sum_i 1/n_i / m**2``.
    """

    m: int
    eta_total: float
    eta_spent: float = 0.0
    lower: float = 0.0
    upper: float = 1.0
    history: list = field(default_factory=list, repr=False)

    def update(self, n: np.ndarray, s: np.ndarray, eta_n: float) -> tuple[float, float]:
        if self.eta_spent + eta_n > self.eta_total * (1.0 + 1e-12):
            raise ValueError("Hoeffding error budget exceeded")
        if np.any(n < 1):
            raise ValueError("every stream needs at least one sample")
        self.eta_spent += eta_n
        if n.min() == n.max():
            a, b = hoeffding_interval(int(s.sum()), int(n.sum()), eta_n)
        else:
            mean = float(np.mean(s / n))
            u = math.sqrt(-math.log(eta_n / 2.0) * float(np.sum(1.0 / n)) / (2.0 * self.m**2))
            a, b = max(0.0, mean - u), min(1.0, mean + u)
        # running intersection; collapse to the nearer endpoint if disjoint
        if b < self.lower:
            a = b = self.lower
        elif a > self.upper:
            a = b = self.upper
        self.lower, self.upper = max(a, self.lower), min(b, self.upper)
        return self.lower, self.upper
