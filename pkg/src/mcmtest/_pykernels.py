"""Pure-Python/numpy implementations of the kernels in ``_kernels.pyx``.

Used when the compiled extension is unavailable, or when
``MCMTEST_BACKEND=python`` is set.  Results agree with the compiled kernels to
within a few ulps on the roots and bit-for-bit on the random draws.
"""

from __future__ import annotations

import math

import numpy as np

_MAX_ITER = 200
_U53 = 1.0 / 9007199254740992.0
_M64 = 0xFFFFFFFFFFFFFFFF


def _log_const(n, x, log_beta):
    return math.lgamma(n + 2.0) - math.lgamma(x + 1.0) - math.lgamma(n - x + 1.0) - log_beta


def _log_excess(p, n, x, c):
    v = c
    if x > 0:
        if p <= 0.0:
            return -math.inf
        v += x * math.log(p)
    if n - x > 0:
        if p >= 1.0:
            return -math.inf
        v += (n - x) * math.log1p(-p)
    return v


def _lower_root(n, x, c, start):
    if x == n:
        return math.exp(-c / n)
    phat = x / n
    p = max(math.exp(-c / x), start)
    hi = phat
    for _ in range(_MAX_ITER):
        v = _log_excess(p, n, x, c)
        if v >= 0.0:
            break
        d = x / p - (n - x) / (1.0 - p)
        step = -v / d
        if not (p + step < hi):
            p = 0.5 * (p + hi)
            continue
        p += step
        if step <= 4e-16 * p:
            break
    return p


def _upper_root(n, x, c, start):
    if x == 0:
        return -math.expm1(-c / n)
    return 1.0 - _lower_root(n, n - x, c, 1.0 - start)


def log_kernel(n: int, x: int, p: float) -> float:
    return _log_excess(p, n, x, _log_const(n, x, 0.0))


def lai_roots(n: int, x: int, beta: float) -> tuple[float, float]:
    c = _log_const(n, x, math.log(beta))
    if _log_excess(x / n, n, x, c) <= 0.0:
        return 0.0, 1.0
    if x == 0:
        return 0.0, -math.expm1(-c / n)
    if x == n:
        return math.exp(-c / n), 1.0
    return _lower_root(n, x, c, 0.0), _upper_root(n, x, c, 1.0)


# -- vectorised batch update ------------------------------------------------

def _vexcess(p, n, x, c):
    with np.errstate(divide="ignore", invalid="ignore"):
        v = c + np.where(x > 0, x * np.log(p), 0.0) + np.where(n > x, (n - x) * np.log1p(-p), 0.0)
    v = np.where((x > 0) & (p <= 0.0), -np.inf, v)
    v = np.where((n > x) & (p >= 1.0), -np.inf, v)
    return v


def _vlower(n, x, c, start):
    """Vectorised ``_lower_root``; all entries need 1 <= x."""
    out = np.empty(len(n))
    full = x == n
    if full.any():
        out[full] = np.exp(-c[full] / n[full])
    rest = ~full
    if not rest.any():
        return out
    n, x, c, start = n[rest], x[rest], c[rest], start[rest]
    hi = x / n
    p = np.maximum(np.exp(-c / x), start)
    active = np.ones(len(n), dtype=bool)
    for _ in range(_MAX_ITER):
        if not active.any():
            break
        a = np.flatnonzero(active)
        pa, na, xa, ca, ha = p[a], n[a], x[a], c[a], hi[a]
        v = _vexcess(pa, na, xa, ca)
        done = v >= 0.0
        d = xa / pa - (na - xa) / (1.0 - pa)
        with np.errstate(invalid="ignore", divide="ignore"):
            step = -v / d
        newton = pa + step
        bisect = ~(newton < ha)
        pn = np.where(bisect, 0.5 * (pa + ha), newton)
        conv = ~bisect & (step <= 4e-16 * pn)
        p[a] = np.where(done, pa, pn)
        active[a] = ~(done | conv)
    out[rest] = p
    return out


def _vupper(n, x, c, start):
    out = np.empty(len(n))
    empty = x == 0
    if empty.any():
        out[empty] = -np.expm1(-c[empty] / n[empty])
    rest = ~empty
    if rest.any():
        out[rest] = 1.0 - _vlower(n[rest], n[rest] - x[rest], c[rest], 1.0 - start[rest])
    return out


def lai_update(n, s, lo, hi, log_beta, idx, flags, logfact):
    idx = idx[n[idx] > 0]
    if len(idx) == 0:
        return 0
    ni, xi = n[idx], s[idx]
    c = logfact[ni + 1] - logfact[xi] - logfact[ni - xi] - log_beta
    nn = ni.astype(np.float64)
    xx = xi.astype(np.float64)
    phat = xx / nn
    informative = _vexcess(phat, nn, xx, c) > 0.0
    a = lo[idx].copy()
    b = hi[idx].copy()
    va = _vexcess(a, nn, xx, c)
    vb = _vexcess(b, nn, xx, c)
    need_lo = informative & (xx > 0) & (va < 0.0)
    need_hi = informative & (xx < nn) & (vb < 0.0)
    below = need_lo & ~(a < phat)
    above = need_hi & ~(b > phat) & ~below
    empty = below | above
    solve_lo = need_lo & ~empty
    solve_hi = need_hi & ~empty
    if solve_lo.any():
        a[solve_lo] = _vlower(nn[solve_lo], xx[solve_lo], c[solve_lo], a[solve_lo])
    if solve_hi.any():
        b[solve_hi] = _vupper(nn[solve_hi], xx[solve_hi], c[solve_hi], b[solve_hi])
    b = np.maximum(a, b)
    # collapse onto the stored endpoint nearest the fresh interval
    ok = ~empty
    lo[idx[ok]] = a[ok]
    hi[idx[ok]] = b[ok]
    if below.any():
        hi[idx[below]] = lo[idx[below]]
    if above.any():
        lo[idx[above]] = hi[idx[above]]
    flags[idx[empty]] = 1
    return int(empty.sum())


# -- counter-based uniforms -------------------------------------------------

def _vmix(z):
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _mix(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def uniforms(seed, idx, counter):
    with np.errstate(over="ignore"):
        s = np.full(len(idx), _mix(int(seed) & _M64), dtype=np.uint64)
        z = _vmix(_vmix(s ^ idx.astype(np.uint64)) ^ counter.astype(np.uint64))
    return (z >> np.uint64(11)).astype(np.float64) * _U53


def bernoulli(seed, idx, counter, p):
    return (uniforms(seed, idx, counter) < p[idx]).astype(np.uint8)
