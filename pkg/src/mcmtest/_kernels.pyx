# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Lai confidence-sequence updates and counter-based draws.

Every function here has a numpy twin in :mod:`mcmtest._pykernels` with the
same signature and semantics; :mod:`mcmtest._backend` picks one at import.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport lgamma, log, log1p, exp, expm1, INFINITY
from libc.stdint cimport uint64_t, int64_t, uint8_t

cnp.import_array()

cdef enum:
    MAX_ITER = 200


cdef inline double _log_const(int64_t n, int64_t x, double log_beta) nogil:
    # log((n+1) * C(n, x)) - log(beta)
    return lgamma(n + 2.0) - lgamma(x + 1.0) - lgamma(n - x + 1.0) - log_beta


cdef inline double _log_excess(double p, int64_t n, int64_t x, double c) nogil:
    # log kernel(p) - log(beta), with 0*log(0) := 0
    cdef double v = c
    if x > 0:
        if p <= 0.0:
            return -INFINITY
        v += x * log(p)
    if n - x > 0:
        if p >= 1.0:
            return -INFINITY
        v += (n - x) * log1p(-p)
    return v


cdef double _lower_root(int64_t n, int64_t x, double c, double start) nogil:
    """Root of the log-excess on (0, x/n); requires x >= 1 and excess(x/n) > 0.

    ``start`` must lie left of the root (excess < 0).  The log-excess is concave,
    so Newton iterates started left of the root increase monotonically to it.
    """
    cdef double phat = <double>x / n
    cdef double p, v, d, step, lo, hi
    cdef int it
    if x == n:
        return exp(-c / n)
    p = exp(-c / x)
    if start > p:
        p = start
    lo = p
    hi = phat
    for it in range(MAX_ITER):
        v = _log_excess(p, n, x, c)
        if v >= 0.0:
            hi = p
            break
        lo = p
        d = x / p - (n - x) / (1.0 - p)
        step = -v / d
        if not (p + step < hi):
            p = 0.5 * (p + hi)
            continue
        p = p + step
        if step <= 4e-16 * p:
            break
    return p


cdef inline double _upper_root(int64_t n, int64_t x, double c, double start) nogil:
    # mirror p -> 1 - p, x -> n - x
    if x == 0:
        return -expm1(-c / n)
    return 1.0 - _lower_root(n, n - x, c, 1.0 - start)


def log_kernel(int64_t n, int64_t x, double p):
    """log((n+1) C(n,x) p^x (1-p)^(n-x))."""
    return _log_excess(p, n, x, _log_const(n, x, 0.0))


def lai_roots(int64_t n, int64_t x, double beta):
    cdef double c = _log_const(n, x, log(beta))
    cdef double g = 0.0, f = 1.0
    cdef double phat = <double>x / n
    if _log_excess(phat, n, x, c) <= 0.0:
        return 0.0, 1.0
    if x == 0:
        f = -expm1((-c) / n)
    elif x == n:
        g = exp(-c / n)
    else:
        g = _lower_root(n, x, c, 0.0)
        f = _upper_root(n, x, c, 1.0)
    return g, f


def lai_update(int64_t[::1] n, int64_t[::1] s, double[::1] lo, double[::1] hi,
               double log_beta, int64_t[::1] idx, uint8_t[::1] flags,
               double[::1] logfact):
    """Intersect ``[lo, hi]`` with the Lai interval at ``(n, s)`` for ``idx``.

    Roots are only solved when the stored endpoint falls outside the fresh
    interval; otherwise the stored endpoint already is the intersection.
    Empty intersections collapse to the nearest stored endpoint and set
    ``flags``.  ``logfact[k]`` must hold ``log(k!)`` for ``k <= max(n) + 1``.
    Returns the number of collapses.
    """
    cdef Py_ssize_t k, i
    cdef int64_t nn, x
    cdef double c, phat, a, b, v
    cdef int clamped = 0
    with nogil:
        for k in range(idx.shape[0]):
            i = idx[k]
            nn = n[i]
            x = s[i]
            if nn <= 0:
                continue
            c = logfact[nn + 1] - logfact[x] - logfact[nn - x] - log_beta
            phat = <double>x / nn
            if _log_excess(phat, nn, x, c) <= 0.0:
                continue
            a = lo[i]
            b = hi[i]
            # lower endpoint
            if x > 0:
                v = _log_excess(a, nn, x, c)
                if v < 0.0:
                    if a < phat:
                        a = _lower_root(nn, x, c, a)
                    else:
                        # fresh interval lies entirely below the stored one
                        hi[i] = lo[i]
                        flags[i] = 1
                        clamped += 1
                        continue
            # upper endpoint
            if x < nn:
                v = _log_excess(b, nn, x, c)
                if v < 0.0:
                    if b > phat:
                        b = _upper_root(nn, x, c, b)
                    else:
                        lo[i] = hi[i]
                        flags[i] = 1
                        clamped += 1
                        continue
            if b < a:
                b = a
            lo[i] = a
            hi[i] = b
    return clamped


cdef inline uint64_t _mix(uint64_t z) nogil:
    z += <uint64_t>0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t seed, uint64_t i, uint64_t k) nogil:
    cdef uint64_t z = _mix(_mix(_mix(seed) ^ i) ^ k)
    return (z >> 11) * (1.0 / 9007199254740992.0)


def uniforms(uint64_t seed, int64_t[::1] idx, int64_t[::1] counter):
    cdef Py_ssize_t k, m = idx.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for k in range(m):
            o[k] = _uniform(seed, <uint64_t>idx[k], <uint64_t>counter[k])
    return out


def bernoulli(uint64_t seed, int64_t[::1] idx, int64_t[::1] counter, double[::1] p):
    """Bits ``u(seed, idx[k], counter[k]) < p[idx[k]]``."""
    cdef Py_ssize_t k, m = idx.shape[0]
    out = np.empty(m, dtype=np.uint8)
    cdef uint8_t[::1] o = out
    with nogil:
        for k in range(m):
            o[k] = _uniform(seed, <uint64_t>idx[k], <uint64_t>counter[k]) < p[idx[k]]
    return out
