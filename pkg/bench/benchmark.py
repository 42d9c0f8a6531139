"""Compare the compiled and pure-Python kernels.

Usage: python bench/benchmark.py [--m 1000] [--iters 200]

Times the three hot paths (one confidence-sequence update for every stream,
a batch of Bernoulli draws, and a complete engine run) under each backend
and checks that both backends give identical results.
"""

from __future__ import annotations

import argparse
import time

import numpy as np
from scipy.special import gammaln

from mcmtest._backend import compiled_kernels, python_kernels


def _lai_workload(kernels, m, iters, p):
    n = np.zeros(m, dtype=np.int64)
    s = np.zeros(m, dtype=np.int64)
    lo = np.zeros(m)
    hi = np.ones(m)
    flags = np.zeros(m, dtype=np.uint8)
    idx = np.arange(m, dtype=np.int64)
    logfact = gammaln(np.arange(iters + 2, dtype=np.float64) + 1.0)
    log_beta = np.log(0.01 / m)
    t0 = time.perf_counter()
    for k in range(1, iters + 1):
        bits = kernels.bernoulli(7, idx, np.full(m, k, dtype=np.int64), p)
        n += 1
        s += bits
        kernels.lai_update(n, s, lo, hi, log_beta, idx, flags, logfact)
    return time.perf_counter() - t0, lo.copy(), hi.copy()


def _draw_workload(kernels, m, iters, p):
    idx = np.repeat(np.arange(m, dtype=np.int64), iters)
    counter = np.tile(np.arange(1, iters + 1, dtype=np.int64), m)
    t0 = time.perf_counter()
    bits = kernels.bernoulli(11, idx, counter, p)
    return time.perf_counter() - t0, bits


def _best(fn, repeat=3):
    runs = [fn() for _ in range(repeat)]
    return min(r[0] for r in runs), runs[0][1:]


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=1000)
    ap.add_argument("--iters", type=int, default=200)
    args = ap.parse_args(argv)
    if compiled_kernels is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    p = np.random.default_rng(0).uniform(0, 1, args.m)

    print(f"m={args.m}, iterations={args.iters}")
    print(f"{'workload':<28}{'compiled [s]':>14}{'python [s]':>14}{'speed-up':>10}")
    for name, work in (("confidence-sequence update", _lai_workload), ("bernoulli draws", _draw_workload)):
        tc, rc = _best(lambda: work(compiled_kernels, args.m, args.iters, p))
        tp, rp = _best(lambda: work(python_kernels, args.m, args.iters, p))
        agree = all(np.allclose(a, b, rtol=0, atol=1e-12) for a, b in zip(rc, rp))
        print(f"{name:<28}{tc:>14.4f}{tp:>14.4f}{tp / tc:>9.1f}x  {'agree' if agree else 'DIFFER'}")

    # engine end to end; the backend is swapped in place
    from mcmtest import confseq, datasrc
    from mcmtest.engine import EngineConfig, run
    from mcmtest.procedures import catalog
    from mcmtest.thresholds import PoundsChengHoeffding

    timings = {}
    for label, k in (("compiled", compiled_kernels), ("python", python_kernels)):
        confseq.kernels = datasrc.kernels = k
        cfg = EngineConfig(catalog("bh", args.m), PoundsChengHoeffding(0.1), 0.01, budget=args.iters, policy="all")
        t0 = time.perf_counter()
        d = run(cfg, datasrc.SyntheticSource(p, 3))
        timings[label] = (time.perf_counter() - t0, d.labels())
    confseq.kernels = datasrc.kernels = compiled_kernels
    tc, lc = timings["compiled"]
    tp, lp = timings["python"]
    print(f"{'engine run (bh, pc-hoeffding)':<28}{tc:>14.4f}{tp:>14.4f}{tp / tc:>9.1f}x  "
          f"{'agree' if np.array_equal(lc, lp) else 'DIFFER'}")


if __name__ == "__main__":
    main()
