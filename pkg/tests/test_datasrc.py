from __future__ import annotations

import numpy as np
import pytest

from mcmtest.datasrc import (
    ReplayFormatError,
    ReplaySource,
    SourceExhausted,
    SyntheticSource,
    load_replay,
    save_replay,
)


def _stream(src, i, k):
    idx = np.full(k, i, dtype=np.int64)
    return src.draw_batch(idx, np.arange(1, k + 1))


def test_degenerate_probabilities():
    src = SyntheticSource([0.0, 1.0], seed=3)
    assert _stream(src, 0, 1000).sum() == 0
    assert _stream(src, 1, 1000).sum() == 1000


def test_empirical_mean():
    src = SyntheticSource([0.3], seed=12)
    assert abs(_stream(src, 0, 100_000).mean() - 0.3) < 0.01


def test_lag_one_autocorrelation():
    x = _stream(SyntheticSource([0.5], seed=99), 0, 1_000_000).astype(float)
    r = np.corrcoef(x[:-1], x[1:])[0, 1]
    # standard error of r is about 1e-3 for 10^6 draws
    assert abs(r) < 3.3e-3


def test_independent_of_call_order():
    src = SyntheticSource(np.linspace(0.1, 0.9, 5), seed=7)
    idx = np.repeat(np.arange(5), 20)
    ctr = np.tile(np.arange(1, 21), 5)
    a = src.draw_batch(idx, ctr)
    perm = np.random.default_rng(0).permutation(idx.size)
    b = np.empty_like(a)
    b[perm] = src.draw_batch(idx[perm], ctr[perm])
    np.testing.assert_array_equal(a, b)
    assert src.draw(3, 7) == a[3 * 20 + 6]


def test_seed_changes_streams():
    p = np.full(4, 0.5)
    a = SyntheticSource(p, 1).draw_batch(np.zeros(200, dtype=np.int64), np.arange(1, 201))
    b = SyntheticSource(p, 2).draw_batch(np.zeros(200, dtype=np.int64), np.arange(1, 201))
    assert not np.array_equal(a, b)
    c = SyntheticSource(p, 1).with_seed(2).draw_batch(np.zeros(200, dtype=np.int64), np.arange(1, 201))
    np.testing.assert_array_equal(b, c)


def test_streams_of_different_hypotheses_differ():
    src = SyntheticSource(np.full(2, 0.5), 5)
    assert not np.array_equal(_stream(src, 0, 200), _stream(src, 1, 200))


@pytest.mark.parametrize("bad", [[], [0.5, 1.2], [float("nan")], [[0.1, 0.2]]])
def test_synthetic_rejects_bad_p(bad):
    with pytest.raises(ValueError):
        SyntheticSource(bad)


def test_synthetic_rejects_bad_seed():
    with pytest.raises(ValueError):
        SyntheticSource([0.1], seed=-1)


def test_draw_index_checked():
    with pytest.raises(IndexError):
        SyntheticSource([0.1]).draw(1, 1)


def test_load_small_file(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("0,1,1\n1,0,0\n", encoding="utf-8")
    src = load_replay(path)
    assert (src.m, src.depth) == (3, 2)
    assert src.draw(0, 2) == 1
    assert src.draw(2, 1) == 1


def test_non_binary_entry(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("0,1\n2,0\n", encoding="utf-8")
    with pytest.raises(ReplayFormatError, match="line 2"):
        load_replay(path)


def test_empty_file(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(ReplayFormatError, match="no iterations"):
        load_replay(path)


def test_ragged_rows(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("0,1,1\n1,0\n", encoding="utf-8")
    with pytest.raises(ReplayFormatError, match="expected 3"):
        load_replay(path)


def test_malformed_entry(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("0,,1\n", encoding="utf-8")
    with pytest.raises(ReplayFormatError):
        load_replay(path)


def test_round_trip(tmp_path):
    mat = (np.random.default_rng(1).random((30, 7)) < 0.4).astype(np.uint8)
    path = tmp_path / "r.csv"
    save_replay(path, mat)
    assert path.read_bytes().count(b"\r") == 0
    np.testing.assert_array_equal(load_replay(path).matrix, mat)


def test_replay_exhaustion():
    src = ReplaySource(np.zeros((3, 2), dtype=int))
    src.draw_batch(np.array([0, 1]), np.array([3, 3]))
    with pytest.raises(SourceExhausted):
        src.draw_batch(np.array([0]), np.array([4]))


def test_replay_matrix_validated():
    with pytest.raises(ReplayFormatError):
        ReplaySource(np.array([[0, 3]]))
    with pytest.raises(ReplayFormatError):
        ReplaySource(np.zeros((0, 3)))
