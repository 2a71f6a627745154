import numpy as np
import pytest
from hypothesis import given, strategies as st

from pdm_bench.oracles import exhaustive_split
from pdm_bench.predictors.trees import (Binner, BoostState, Tree, fit_forest, fit_gbt, fit_tree,
                                        gbt_round)


def test_binner_exact_for_few_values():
    X = np.array([[0.0], [1.0], [1.0], [5.0]])
    b = Binner().fit(X)
    assert b.edges[0].tolist() == [0.0, 1.0, 5.0]
    assert b.transform(X)[:, 0].tolist() == [0, 1, 1, 2]
    with pytest.raises(ValueError):
        Binner(1)


def test_split_equals_exhaustive_scan():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(3, 60))
        x = np.round(rng.normal(size=n), int(rng.integers(0, 3)))
        r = rng.normal(size=n)
        best = exhaustive_split(x, r)
        tree = fit_tree(x[:, None], r, max_depth=1, min_leaf=1)
        if best is None:
            assert tree.feature[0] == -1
            continue
        assert tree.feature[0] == 0 and tree.threshold[0] == best[0]
        pred = tree.predict(x[:, None])
        assert ((r - pred) ** 2).sum() == pytest.approx(best[1], rel=1e-9, abs=1e-9)


def test_split_picks_best_feature():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 4))
    r = rng.normal(size=50)
    tree = fit_tree(X, r, max_depth=1, min_leaf=1)
    sse = [exhaustive_split(X[:, j], r)[1] for j in range(4)]
    assert tree.feature[0] == int(np.argmin(sse))


def test_depth_zero_is_mean():
    r = np.array([1.0, 2.0, 6.0])
    tree = fit_tree(np.arange(3.0)[:, None], r, max_depth=0)
    assert tree.feature.tolist() == [-1] and tree.value[0] == pytest.approx(3.0)


def test_tree_depth_bound_and_dict_roundtrip():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(200, 5))
    tree = fit_tree(X, rng.normal(size=200), max_depth=3)
    assert tree.depth <= 3
    again = Tree.from_dict(tree.to_dict())
    assert np.array_equal(again.predict(X), tree.predict(X))


def test_gbt_single_depth0_round_is_mean():
    y = np.array([0.0, 0.2, 0.4, 1.0])
    X = np.arange(4.0)[:, None]
    s = fit_gbt(X, y, rounds=1, max_depth=0, learning_rate=1.0)
    assert np.allclose(s.predict(X), y.mean())


def test_gbt_training_mse_non_increasing():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(150, 6))
    y = np.clip(0.5 + 0.2 * X[:, 0] - 0.1 * X[:, 1] ** 2, 0, 1)
    s = BoostState(float(y.mean()), learning_rate=0.3, max_depth=3)
    errs = [np.mean((s.raw(X) - y) ** 2)]
    for _ in range(15):
        s = gbt_round(s, X, y - s.raw(X))
        errs.append(np.mean((s.raw(X) - y) ** 2))
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.5 * errs[0]


def test_gbt_logistic_learns_separable():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(200, 3))
    y = (X[:, 0] > 0).astype(float)
    s = fit_gbt(X, y, rounds=30, objective="logistic")
    p = s.predict(X)
    assert np.all((p > 0) & (p < 1))
    assert np.mean((p >= 0.5) == y) > 0.97


def test_forest_single_tree_no_bootstrap_equals_tree():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(80, 3))
    y = (rng.random(80) > 0.5).astype(float)
    forest = fit_forest(X, y, trees=1, max_depth=4, feature_subset=None, bootstrap=False)
    tree = fit_tree(X, y, max_depth=4, min_leaf=1)
    assert np.allclose(forest.predict(X), np.clip(tree.predict(X), 0, 1))


def test_forest_is_mean_of_trees():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(60, 9))
    y = (X[:, 0] + rng.normal(size=60) > 0).astype(float)
    f = fit_forest(X, y, trees=7, max_depth=5, seed=3)
    assert np.allclose(f.predict(X), np.mean([t.predict(X) for t in f.trees], axis=0))
    g = fit_forest(X, y, trees=7, max_depth=5, seed=3)
    assert np.array_equal(f.predict(X), g.predict(X))


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=30))
def test_leaf_values_bounded_by_residuals(vals):
    r = np.array(vals)
    x = np.arange(len(r), dtype=float)[:, None]
    tree = fit_tree(x, r, max_depth=3, min_leaf=1)
    p = tree.predict(x)
    assert p.min() >= r.min() - 1e-9 and p.max() <= r.max() + 1e-9
