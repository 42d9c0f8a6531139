"""Step-up and step-down multiple testing procedures.

A procedure is a threshold function ``tau(i, alpha)`` (the critical value for
the ``i``-th smallest p-value, ranks starting at 1) together with a kind:

* step-up rejects every ``p_i <= max{p_(j) : p_(j) <= tau(j)}`` (``max {} = 0``);
* step-down rejects every ``p_i < min{p_(j) : p_(j) > tau(j)}`` (``min {} = 1``).

Hypothesis indices are 0-based throughout.  Rejection sets are returned as
sorted ``int`` arrays; :meth:`Procedure.mask` gives the boolean form.

Thresholds ``alpha`` outside ``[0, 1]`` are clamped into it before ``tau`` is
evaluated, so an infinite upper threshold bound behaves like ``alpha = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

__all__ = [
    "CATALOG",
    "Procedure",
    "ThresholdFunction",
    "catalog",
    "hommel",
    "rom_critical_values",
    "simes_global",
    "step_down",
    "step_up",
]

STEP_UP = "step-up"
STEP_DOWN = "step-down"


def _check_p(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("p-values must be a 1-d vector")
    if np.isnan(p).any():
        raise ValueError("p-values contain NaN")
    if p.size and (p.min() < 0.0 or p.max() > 1.0):
        raise ValueError("p-values must lie in [0, 1]")
    return p


def _clamp_alpha(alpha: float) -> float:
    if alpha != alpha:
        raise ValueError("alpha is NaN")
    return min(max(float(alpha), 0.0), 1.0)


@dataclass
class ThresholdFunction:
    """Critical values ``tau(i, alpha)`` for ranks ``i = 1..m``.

    ``values(alpha)`` maps an already-clamped ``alpha`` to the length-``m``
    vector of critical values.
    """

    name: str
    m: int
    values: Callable[[float], np.ndarray]
    extra: dict = field(default_factory=dict)
    _cache: tuple = field(default=(None, None), init=False, repr=False, compare=False)

    def critical_values(self, alpha: float) -> np.ndarray:
        alpha = _clamp_alpha(alpha)
        if self._cache[0] != alpha:
            tau = np.asarray(self.values(alpha), dtype=np.float64)
            tau.setflags(write=False)
            self._cache = (alpha, tau)
        return self._cache[1]

    def __call__(self, i: int, alpha: float) -> float:
        if not 1 <= i <= self.m:
            raise IndexError("rank out of range")
        return float(self.critical_values(alpha)[i - 1])


def _sorted(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(p, kind="stable")
    return order, p[order]


def _step_up_mask(p: np.ndarray, tau: np.ndarray) -> np.ndarray:
    ps = np.sort(p)
    below = np.flatnonzero(ps <= tau)
    cutoff = ps[below[-1]] if below.size else 0.0
    return p <= cutoff


def _step_down_mask(p: np.ndarray, tau: np.ndarray) -> np.ndarray:
    ps = np.sort(p)
    above = np.flatnonzero(ps > tau)
    cutoff = ps[above[0]] if above.size else 1.0
    return p < cutoff


def _as_tau(tau, m: int, alpha: float) -> np.ndarray:
    if isinstance(tau, ThresholdFunction):
        if tau.m != m:
            raise ValueError(f"threshold function built for m={tau.m}, got {m} p-values")
        return tau.critical_values(alpha)
    # plain callable tau(i, m, alpha)
    a = _clamp_alpha(alpha)
    return np.array([tau(i, m, a) for i in range(1, m + 1)], dtype=np.float64)


def step_up(p, alpha: float, tau) -> np.ndarray:
    """Indices rejected by the step-up procedure with threshold function ``tau``."""
    p = _check_p(p)
    return np.flatnonzero(_step_up_mask(p, _as_tau(tau, p.size, alpha)))


def step_down(p, alpha: float, tau) -> np.ndarray:
    """Indices rejected by the step-down procedure with threshold function ``tau``."""
    p = _check_p(p)
    return np.flatnonzero(_step_down_mask(p, _as_tau(tau, p.size, alpha)))


@dataclass
class Procedure:
    kind: str
    tau: ThresholdFunction
    label: str

    def __post_init__(self):
        if self.kind not in (STEP_UP, STEP_DOWN):
            raise ValueError(f"unknown procedure kind {self.kind!r}")

    @property
    def m(self) -> int:
        return self.tau.m

    def mask(self, p, alpha: float, *, check: bool = True) -> np.ndarray:
        if check:
            p = _check_p(p)
            if p.size != self.m:
                raise ValueError(f"{self.label} built for m={self.m}, got {p.size} p-values")
        tau = self.tau.critical_values(alpha)
        if self.kind == STEP_UP:
            return _step_up_mask(p, tau)
        return _step_down_mask(p, tau)

    def __call__(self, p, alpha: float) -> np.ndarray:
        return np.flatnonzero(self.mask(p, alpha))

    def __reduce__(self):
        # catalog thresholds are closures; rebuild them by name so that
        # procedures can cross process boundaries
        if self.tau.name in CATALOG:
            return (_rebuild, (self.tau.name, self.m, self.kind, dict(self.tau.extra)))
        return object.__reduce__(self)


# -- threshold functions ----------------------------------------------------

def rom_critical_values(m: int, alpha: float) -> np.ndarray:
    """Rom's sharpened Hochberg constants ``c_1 = alpha > c_2 > ... > c_m``.

    ``c_1 = alpha``, ``c_2 = alpha/2`` and for ``k >= 3``
    ``c_k = (sum_{i<k} alpha**i - sum_{i=1}^{k-2} C(k, i) c_{i+1}**(k-i)) / k``.
    ``c_k`` is the critical value of the ``k``-th *largest* p-value.
    """
    c = np.zeros(m + 1)
    if m >= 1:
        c[1] = alpha
    if m >= 2:
        c[2] = alpha / 2.0
    if alpha <= 0.0:
        return c[1:]
    for k in range(3, m + 1):
        i = np.arange(1, k - 1)
        powers = np.sum(alpha ** np.arange(1, k))
        log_binom = gammaln(k + 1.0) - gammaln(i + 1.0) - gammaln(k - i + 1.0)
        with np.errstate(divide="ignore"):
            terms = np.exp(log_binom + (k - i) * np.log(c[i + 1]))
        c[k] = (powers - terms.sum()) / k
    return c[1:]


def _bonferroni(m):
    return lambda a: np.full(m, a / m)


def _hochberg(m):
    denom = m + 1.0 - np.arange(1, m + 1)
    return lambda a: a / denom


def _bh(m):
    ranks = np.arange(1, m + 1) / m
    return lambda a: ranks * a


def _by(m):
    ranks = np.arange(1, m + 1) / m
    harmonic = float(np.sum(1.0 / np.arange(1, m + 1)))
    return lambda a: ranks * (a / harmonic)


def _sidak(m):
    expo = 1.0 / (m + 1.0 - np.arange(1, m + 1))

    def values(a):
        if a >= 1.0:
            return np.ones(m)
        return -np.expm1(np.log1p(-a) * expo)

    return values


def _rom(m):
    return lambda a: rom_critical_values(m, a)[::-1]


def shaffer_counts(m: int, a) -> np.ndarray:
    """``t_i = max{a_j : a_j <= m - i + 1}`` for ``i = 1..m`` (0 if none)."""
    a = _check_shaffer(m, a)
    cap = m - np.arange(1, m + 1) + 1
    pos = np.searchsorted(a, cap, side="right") - 1
    return np.where(pos >= 0, a[np.maximum(pos, 0)], 0)


def _check_shaffer(m: int, a) -> np.ndarray:
    if a is None:
        raise ValueError("Shaffer's procedure needs the admissible true-null counts 'a'")
    arr = np.asarray(a)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("Shaffer sequence must be a non-empty 1-d sequence")
    if not np.all(np.equal(np.mod(arr, 1), 0)):
        raise ValueError("Shaffer sequence must contain integers")
    arr = arr.astype(np.int64)
    if arr[0] < 0 or arr[-1] > m or np.any(np.diff(arr) <= 0):
        raise ValueError("Shaffer sequence must satisfy 0 <= a_1 < ... < a_r <= m")
    return arr


def _shaffer(m, a):
    t = shaffer_counts(m, a).astype(np.float64)

    def values(alpha):
        with np.errstate(divide="ignore"):
            return np.where(t > 0, np.minimum(1.0, alpha / np.where(t > 0, t, 1.0)), 1.0)

    return values


# name -> (label, kind, factory)
CATALOG: dict[str, tuple[str, str, Callable]] = {
    "bonferroni": ("Bonferroni", STEP_DOWN, _bonferroni),
    "holm": ("Holm", STEP_DOWN, _hochberg),
    "sidak": ("Sidak", STEP_DOWN, _sidak),
    "shaffer": ("Shaffer", STEP_DOWN, _shaffer),
    "hochberg": ("Hochberg", STEP_UP, _hochberg),
    "rom": ("Rom", STEP_UP, _rom),
    "bh": ("Benjamini-Hochberg", STEP_UP, _bh),
    "by": ("Benjamini-Yekutieli", STEP_UP, _by),
}

_ALIASES = {"benjamini-hochberg": "bh", "benjamini-yekutieli": "by", "šidák": "sidak"}


def catalog(name: str, m: int, **params) -> Procedure:
    """Build a named procedure for ``m`` hypotheses.

    ``bonferroni`` accepts ``kind="step-up"`` (the result is identical either
    way); ``shaffer`` requires ``a``, the increasing sequence of possible
    numbers of true nulls.
    """
    key = _ALIASES.get(name.lower(), name.lower())
    if key not in CATALOG:
        raise ValueError(f"unknown procedure {name!r}; choose from {sorted(CATALOG)}")
    if m < 1:
        raise ValueError("m must be positive")
    label, kind, factory = CATALOG[key]
    extra = {}
    if key == "shaffer":
        extra["a"] = tuple(int(v) for v in _check_shaffer(m, params.pop("a", None)))
        values = factory(m, extra["a"])
    else:
        values = factory(m)
    if key == "bonferroni":
        kind = params.pop("kind", kind)
    if params:
        raise ValueError(f"unexpected parameters for {key}: {sorted(params)}")
    return Procedure(kind=kind, tau=ThresholdFunction(key, m, values, extra), label=label)


def _rebuild(name: str, m: int, kind: str, extra: dict) -> Procedure:
    proc = catalog(name, m, **extra)
    proc.kind = kind
    return proc


def simes_global(p, alpha: float) -> bool:
    """Simes' global test: reject the intersection null iff BH rejects anything."""
    p = _check_p(p)
    return bool(step_up(p, alpha, catalog("bh", p.size).tau).size)


def hommel(p, alpha: float) -> np.ndarray:
    """Hommel's procedure (kept for its counterexample; not a catalog entry).

    Finds the largest ``k`` with ``p_(m-k+j) > j*alpha/k`` for all ``j <= k`` and
    rejects ``p_i <= alpha/k``; if no such ``k`` exists everything is rejected.
    """
    p = _check_p(p)
    m = p.size
    ps = np.sort(p)
    for k in range(m, 0, -1):
        j = np.arange(1, k + 1)
        if np.all(ps[m - k :] > j * alpha / k):
            return np.flatnonzero(p <= alpha / k)
    return np.arange(m)
