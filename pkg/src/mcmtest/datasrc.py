"""Sources of exceedance indicators.

A source hands out the ``k``-th indicator of hypothesis ``i`` (``k`` counts
from 1).  Two kinds exist:

* :class:`SyntheticSource` draws Bernoulli(``p_star[i]``) bits from a
  counter-based generator keyed by ``(seed, i, k)``, so a stream does not
  depend on the order in which hypotheses are sampled.
* :class:`ReplaySource` replays a precomputed 0/1 matrix, one row per
  sample index (the text format read by :func:`load_replay`).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ._backend import kernels

__all__ = [
    "ReplayFormatError",
    "ReplaySource",
    "SourceExhausted",
    "SyntheticSource",
    "load_replay",
]

_U64 = (1 << 64) - 1


class SourceExhausted(Exception):
    """A replay source has no sample left for a requested hypothesis."""


class ReplayFormatError(ValueError):
    pass


class SyntheticSource:
    def __init__(self, p_star, seed: int = 0):
        p = np.ascontiguousarray(p_star, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("p_star must be a non-empty vector")
        if np.isnan(p).any() or p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("p_star must lie in [0, 1]")
        if not 0 <= int(seed) <= _U64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        self.p_star = p
        self.seed = int(seed)
        self.m = p.size
        self.depth = None

    def draw_batch(self, idx: np.ndarray, counter: np.ndarray) -> np.ndarray:
        """Indicators for hypotheses ``idx`` at per-hypothesis sample numbers ``counter``."""
        idx = np.ascontiguousarray(idx, dtype=np.int64)
        counter = np.ascontiguousarray(counter, dtype=np.int64)
        return kernels.bernoulli(self.seed, idx, counter, self.p_star)

    def draw(self, i: int, k: int) -> int:
        if not 0 <= i < self.m:
            raise IndexError("hypothesis index out of range")
        return int(self.draw_batch(np.array([i]), np.array([k]))[0])

    def with_seed(self, seed: int) -> "SyntheticSource":
        return SyntheticSource(self.p_star, seed)


class ReplaySource:
    def __init__(self, matrix):
        mat = np.asarray(matrix)
        if mat.ndim != 2 or mat.shape[0] == 0:
            raise ReplayFormatError("no iterations")
        if not np.isin(mat, (0, 1)).all():
            raise ReplayFormatError("entries must be 0 or 1")
        self.matrix = np.ascontiguousarray(mat, dtype=np.uint8)
        self.depth, self.m = self.matrix.shape

    def draw_batch(self, idx: np.ndarray, counter: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        counter = np.asarray(counter, dtype=np.int64)
        if counter.size and counter.max() > self.depth:
            raise SourceExhausted(f"replay holds {self.depth} samples per hypothesis")
        return self.matrix[counter - 1, idx]

    def draw(self, i: int, k: int) -> int:
        if not 0 <= i < self.m:
            raise IndexError("hypothesis index out of range")
        return int(self.draw_batch(np.array([i]), np.array([k]))[0])


def _parse_rows(lines) -> np.ndarray:
    rows = []
    width = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        fields = line.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ReplayFormatError(f"line {lineno}: expected {width} entries, found {len(fields)}")
        row = []
        for f in fields:
            f = f.strip()
            if f not in ("0", "1"):
                raise ReplayFormatError(f"line {lineno}: entry {f!r} is not 0 or 1")
            row.append(f == "1")
        rows.append(row)
    if not rows:
        raise ReplayFormatError("no iterations")
    return np.array(rows, dtype=np.uint8)


def load_replay(path) -> ReplaySource:
    """Read an indicator matrix: one sample index per line, comma-separated 0/1."""
    with open(Path(path), encoding="utf-8") as fh:
        return ReplaySource(_parse_rows(fh))


def save_replay(path, matrix) -> None:
    mat = np.asarray(matrix, dtype=np.uint8)
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        for row in mat:
            fh.write(",".join("1" if v else "0" for v in row) + "\n")
