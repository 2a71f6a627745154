import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdm_bench.oracles import naive_relieff
from pdm_bench.predictors import PredictorConfig
from pdm_bench.reduction import (Reducer, ReductionError, ReliefFConfig, kept_count, pca_fit,
                                 pca_transform, reduction_grid, relieff_ranking, relieff_weights,
                                 search_reduction)


def _planted(seed, n=120, d=10, informative=(3,)):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    y = (X[:, list(informative)].sum(1) > 0.5 * len(informative)).astype(float)
    return X, y


def test_relieff_ranks_planted_feature_first():
    X, y = _planted(0)
    w = relieff_weights(X, y)
    assert int(np.argmax(w)) == 3 and w[3] > 0.1


def test_relieff_constant_feature_is_zero():
    X, y = _planted(1)
    X[:, 5] = 7.0
    assert relieff_weights(X, y)[5] == 0.0


def test_relieff_single_class_raises():
    with pytest.raises(ReductionError):
        relieff_weights(np.zeros((4, 2)), np.ones(4))


def test_relieff_matches_naive_loop():
    rng = np.random.default_rng(2)
    for k in (1, 3, 10):
        X = rng.normal(size=(25, 5))
        y = (X[:, 0] + 0.3 * rng.normal(size=25) > 0).astype(float)
        assert np.allclose(relieff_weights(X, y, ReliefFConfig(k)), naive_relieff(X, y, k), atol=1e-12)


def test_relieff_permutation_invariance():
    X, y = _planted(3, n=60, d=6)
    w = relieff_weights(X, y)
    perm = np.random.default_rng(0).permutation(6)
    assert np.allclose(relieff_weights(X[:, perm], y), w[perm], atol=1e-12)


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_relieff_weights_bounded(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 3, (20, 4)).astype(float)
    y = np.r_[np.zeros(10), np.ones(10)]
    w = relieff_weights(X, y, ReliefFConfig(3))
    assert np.all(w >= -1) and np.all(w <= 1)


def test_relieff_sampling_is_seeded():
    X, y = _planted(4, n=80)
    a = relieff_weights(X, y, ReliefFConfig(5, 20, seed=1))
    b = relieff_weights(X, y, ReliefFConfig(5, 20, seed=1))
    assert np.array_equal(a, b)


def test_ranking_ties_keep_index_order():
    assert relieff_ranking(np.array([0.1, 0.5, 0.1, 0.5])).tolist() == [1, 3, 0, 2]


def test_pca_examples():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    p = pca_fit(X)
    assert np.allclose(p.basis[0], [1 / np.sqrt(2)] * 2)
    assert np.allclose(pca_transform(p.with_kept(1), X)[:, 0], [-np.sqrt(2), 0, np.sqrt(2)])
    assert p.variances[0] == pytest.approx(2.0)


def test_pca_identical_rows_degenerate():
    p = pca_fit(np.ones((5, 3)))
    assert p.degenerate and np.allclose(pca_transform(p, np.ones((2, 3))), 0)


def test_pca_variances_match_covariance_eigenvalues():
    X = np.random.default_rng(5).normal(size=(50, 6)) @ np.diag([3, 2, 1, 0.5, 0.2, 0.1])
    p = pca_fit(X)
    ev = np.sort(np.linalg.eigvalsh(np.cov(X.T)))[::-1]
    assert np.allclose(p.variances, ev)
    assert np.abs(p.basis @ p.basis.T - np.eye(6)).max() < 1e-8
    assert np.abs(pca_transform(p, X) @ p.basis + p.mean - X).max() < 1e-8
    # the leading entry of every component is positive
    assert np.all(p.basis[np.arange(6), np.argmax(np.abs(p.basis), 1)] > 0)


def test_grid():
    g = reduction_grid(1352)
    assert len(g) == 30 and g[0] == 1.0
    assert 1352 * g[-1] >= 2 > 1352 * g[-1] * 0.8
    assert kept_count(1352, 1.0) == 1352 and kept_count(10, 0.01) == 1


def test_reducer_json_roundtrip():
    X = np.random.default_rng(6).normal(size=(20, 4))
    for r in (Reducer("relieff", 4, columns=np.array([0, 2])),
              Reducer("pca", 4, projection=pca_fit(X).with_kept(2)), Reducer("none", 4)):
        again = Reducer.from_json(r.to_json())
        assert np.allclose(again.transform(X), r.transform(X)) and again.width == r.width
    with pytest.raises(ReductionError):
        Reducer("none", 4).transform(X[:, :3])


def test_search_prefers_fewer_dims_on_ties():
    X, y = _planted(7, n=100, d=8)
    res = search_reduction((X, y), (X, y), PredictorConfig("knn", params={"k": 1}), "relieff",
                           scorer=lambda s: 1.0, min_features=1)
    assert res.reducer.width == 1


def test_search_finds_planted_subset():
    rng = np.random.default_rng(8)
    X = rng.random((300, 100))
    inf = [5, 17, 42, 63, 88]
    y = (X[:, inf].sum(1) > 2.5).astype(float)
    Xv = rng.random((150, 100))
    yv = (Xv[:, inf].sum(1) > 2.5).astype(float)
    res = search_reduction((X, y), (Xv, yv), PredictorConfig("knn", params={"k": 5}), "relieff")
    assert set(inf) <= set(res.reducer.columns.tolist())
    assert res.reducer.width <= 20
    full = [c for c in res.curve if c[1] == 100][0][2]
    assert res.score > full


def test_search_pca_curve_shape():
    X, y = _planted(9, n=80, d=12)
    res = search_reduction((X, y), (X, y), PredictorConfig("knn"), "pca")
    kept = sorted(c[1] for c in res.curve)
    assert len(kept) == len(set(kept)) and kept[-1] == 12
    assert res.score == max(c[2] for c in res.curve)
    with pytest.raises(ReductionError):
        search_reduction((X, y), (X, None), PredictorConfig("knn"), "pca")
