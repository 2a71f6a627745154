import numpy as np
import pytest
from hypothesis import given, strategies as st

from pdm_bench.resampling import (ResamplePlan, ResampleError, apply, oversample, resample_indices,
                                  undersample)

labels = st.lists(st.integers(0, 1), min_size=2, max_size=80).filter(lambda v: 0 < sum(v) < len(v))


@given(labels, st.integers(0, 1000))
def test_undersample_balance_and_subset(y, seed):
    y = np.array(y, dtype=float)
    idx = resample_indices(y, ResamplePlan("undersample", 1, seed))
    small = min(y.sum(), len(y) - y.sum())
    assert len(idx) == 2 * small and y[idx].sum() == small
    assert len(set(idx.tolist())) == len(idx)


@given(labels, st.integers(0, 1000))
def test_oversample_balance_and_superset(y, seed):
    y = np.array(y, dtype=float)
    idx = resample_indices(y, ResamplePlan("oversample", 1, seed))
    big = max(y.sum(), len(y) - y.sum())
    assert len(idx) == 2 * big and y[idx].sum() == big
    assert set(range(len(y))) <= set(idx.tolist())
    counts = np.bincount(idx, minlength=len(y))
    maj = 1.0 if y.sum() > len(y) / 2 else 0.0
    if y.sum() * 2 != len(y):
        assert np.all(counts[y == maj] == 1)


def test_inflate_tiles_rows():
    y = np.array([0, 0, 0, 1.0])
    idx = resample_indices(y, ResamplePlan("none", 3))
    assert idx.tolist() == [0, 1, 2, 3] * 3


def test_regression_labels_use_threshold():
    y = np.array([0.1, 0.2, 0.7, 0.3])
    X, yy = undersample(np.arange(4)[:, None], y, ResamplePlan(seed=0))
    assert np.sum(yy >= 0.5) == 1 and len(yy) == 2
    X, yy = oversample(np.arange(4)[:, None], y, ResamplePlan(seed=0), threshold=0.25)
    assert np.sum(yy >= 0.25) == np.sum(yy < 0.25)


def test_rows_are_copied_verbatim():
    X = np.arange(12.0).reshape(6, 2)
    y = np.array([0, 1, 0, 0, 0, 1.0])
    Xr, yr = apply(X, y, ResamplePlan("oversample", 1, 4))
    for row, lab in zip(Xr, yr):
        i = int(row[0] // 2)
        assert np.array_equal(row, X[i]) and lab == y[i]


def test_determinism_and_errors():
    y = np.array([0, 1, 0, 0, 1, 0, 0.0])
    p = ResamplePlan("undersample", 1, 11)
    assert np.array_equal(resample_indices(y, p), resample_indices(y, p))
    with pytest.raises(ResampleError):
        resample_indices(np.zeros(4), p)
    with pytest.raises(ValueError):
        ResamplePlan("smote")
    with pytest.raises(ValueError):
        ResamplePlan("none", 0)


def test_hundred_random_datasets():
    rng = np.random.default_rng(0)
    for i in range(100):
        n = int(rng.integers(4, 200))
        y = (rng.random(n) < rng.uniform(0.05, 0.95)).astype(float)
        y[0], y[1] = 0, 1
        under = resample_indices(y, ResamplePlan("undersample", 1, i))
        over = resample_indices(y, ResamplePlan("oversample", 1, i))
        assert 2 * y[under].sum() == len(under) and 2 * y[over].sum() == len(over)
        assert set(under.tolist()) <= set(range(n)) <= set(over.tolist())
