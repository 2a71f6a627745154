import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pdm_bench.classification import settings_preset, slice_windows
from pdm_bench.logmodel import Episode, EventLog
from pdm_bench.oracles import naive_collapse
from pdm_bench.regression import (ALARM_GRID, DayMatrix, RegressionConfig, RiskCurveSpec, alarm,
                                  binarize_days, build_regression_dataset, collapse_consecutive,
                                  prune_frequent, prune_rare, risk_label, select_types)
from conftest import random_log


def test_curve_invariants():
    with pytest.raises(ValueError):
        RiskCurveSpec(-1, 1)
    with pytest.raises(ValueError):
        RiskCurveSpec(1, 0)


def test_config_invariants():
    with pytest.raises(ValueError):
        RegressionConfig(N=0, step=1)
    with pytest.raises(ValueError):
        RegressionConfig(N=1, step=1, alarm_threshold=1.0)


def test_prune_rare_examples():
    log = EventLog([0, 1, 2, 3], [0, 0, 1, 1], 5, 4, target_type=0)
    kept = prune_rare(log, 2, 0.5)
    assert 2 not in kept and 3 not in kept and {0, 1} <= kept
    assert prune_rare(log, 2, 0.0) == frozenset(range(4))


def test_prune_rare_matches_counts(rng):
    for _ in range(50):
        log = random_log(rng, ft=6, n=80)
        tc = int(rng.integers(1, 10))
        ratio = float(rng.uniform(0, 3))
        expect = {t for t in range(6) if t == log.target_type or
                  sum(1 for x in log.types if x == t) >= ratio * tc}
        assert prune_rare(log, tc, ratio) == expect


def test_prune_frequent_examples():
    log = EventLog(list(range(10)) + [0], [2] * 10 + [1], 10, 3)
    assert 2 not in prune_frequent(log, 0.3)
    assert prune_frequent(log, 1.0) == frozenset(range(3))


def test_prune_frequent_matches_day_presence(rng):
    for _ in range(50):
        log = random_log(rng, ft=5, n=100)
        frac = float(rng.uniform(0, 1))
        expect = {t for t in range(5)
                  if len({int(d) for d, x in zip(log.days, log.types) if x == t}) <= frac * log.horizon_days}
        assert prune_frequent(log, frac) == expect


def test_binarize_examples():
    log = EventLog([2, 2, 3], [1, 1, 2], 5, 3, target_type=0)
    m = binarize_days(log, (1, 2))
    assert m.matrix[2].tolist() == [1, 0] and m.matrix[3].tolist() == [0, 1]
    assert not binarize_days(EventLog([], [], 4, 3), (1, 2)).matrix.any()
    with pytest.raises(ValueError):
        binarize_days(log, (0, 1))


def test_binarize_row_sums(rng):
    for _ in range(30):
        log = random_log(rng, ft=6, n=60)
        kept = tuple(t for t in range(6) if t != log.target_type)
        m = binarize_days(log, kept).matrix
        for d in range(log.horizon_days):
            distinct = {int(t) for dd, t in zip(log.days, log.types) if dd == d and t != log.target_type}
            assert m[d].sum() == len(distinct) <= len(kept)


def test_collapse_example_and_idempotence():
    m = DayMatrix(np.array([[1], [1], [1], [0], [1]], dtype=np.uint8), (1,))
    c = collapse_consecutive(m)
    assert c.matrix[:, 0].tolist() == [1, 0, 0, 0, 1]
    assert np.array_equal(collapse_consecutive(c).matrix, c.matrix)


@given(st.lists(st.lists(st.integers(0, 1), min_size=3, max_size=3), max_size=30))
def test_collapse_matches_run_scan(rows):
    a = np.array(rows, dtype=np.uint8).reshape(-1, 3)
    c = collapse_consecutive(DayMatrix(a, (1, 2, 3))).matrix
    assert np.array_equal(c, naive_collapse(a))
    assert np.array_equal(collapse_consecutive(DayMatrix(c, (1, 2, 3))).matrix, c)


def test_risk_examples():
    ep = Episode(0, 40)
    assert risk_label(40 - 7, ep, RiskCurveSpec(7, 0.9)) == 0.5
    assert abs(risk_label(40, ep, RiskCurveSpec(7, 0.9)) - 1 / (1 + math.exp(-6.3))) < 1e-12
    assert abs(risk_label(40, ep, RiskCurveSpec(7, 0.9)) - 0.99817) < 1e-5
    assert risk_label(0, ep, RiskCurveSpec(7, 60.0)) == 0.0
    with pytest.raises(ValueError):
        risk_label(41, ep, RiskCurveSpec(7, 0.9))
    with pytest.raises(ValueError):
        risk_label(-1, Episode(0, 3), RiskCurveSpec(1, 1))


@given(st.floats(0, 30), st.floats(0.05, 3))
def test_risk_strictly_decreasing_in_distance(m, s):
    curve = RiskCurveSpec(m, s)
    ep = Episode(0, 100)
    vals = [risk_label(100 - d, ep, curve) for d in range(0, 40)]
    assert all(0 < v < 1 for v in vals if 1e-300 < v < 1 - 1e-16)
    diffs = np.diff(vals)
    assert np.all(diffs <= 0)


def test_alarm_rule():
    assert alarm(0.5, 0.5) == 1
    assert alarm(0.0, 0.3) == 0
    scores = np.random.default_rng(0).random(200)
    counts = [alarm(scores, t).sum() for t in ALARM_GRID]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert ALARM_GRID[0] == 0.1 and ALARM_GRID[-1] == 0.9 and len(ALARM_GRID) == 17


def _reg_log():
    days = [1, 2, 2, 5, 20, 30, 31, 40]
    types = [1, 2, 1, 3, 0, 2, 2, 0]
    return EventLog(days, types, 50, 4, target_type=0)


def test_regression_dataset_structure():
    log = _reg_log()
    cfg = RegressionConfig(N=4, step=2)
    curve = RiskCurveSpec(5, 0.7)
    ds = build_regression_dataset(log, cfg, curve, (1, 2, 3))
    assert ds.X.shape[1] == 3
    assert np.all(ds.anchors <= 40)
    assert not np.isnan(ds.y).any()
    full = build_regression_dataset(log, cfg, curve, (1, 2, 3), drop_tail=False)
    assert np.isnan(full.y[full.anchors > 40]).all()
    # group ending at the midpoint
    i = int(np.flatnonzero(ds.anchors == 15)[0])
    assert ds.y[i] == 0.5
    # group with no events
    j = int(np.flatnonzero(ds.anchors == 11)[0])
    assert not ds.X[j].any()


def test_regression_features_are_or_of_collapsed_rows(rng):
    for _ in range(20):
        log = random_log(rng, horizon=80, ft=5, n=120)
        kept = tuple(t for t in range(5) if t != log.target_type)
        cfg = RegressionConfig(N=5, step=3)
        ds = build_regression_dataset(log, cfg, RiskCurveSpec(4, 0.7), kept, drop_tail=False)
        dm = naive_collapse(binarize_days(log, kept).matrix)
        for a, row in zip(ds.anchors, ds.X):
            assert np.array_equal(row, dm[a - 4:a + 1].max(axis=0))


@pytest.mark.parametrize("name", list("ABCD"))
def test_anchors_coincide_with_classification(name, rng):
    window = settings_preset(name)
    log = random_log(rng, horizon=200, ft=5, n=300)
    cfg = RegressionConfig.for_window(window)
    ds = build_regression_dataset(log, cfg, RiskCurveSpec(6), (1, 2), drop_tail=False)
    assert ds.anchors.tolist() == [s.anchor_day for s in slice_windows(log, window)]


def test_kept_types_come_from_training_log():
    train = _reg_log()
    cfg = RegressionConfig(N=4, step=2, rare_min_ratio=1.0, frequent_max_day_fraction=0.3)
    kept = select_types(train, cfg)
    assert 0 not in kept and kept == (1, 2)
    test = EventLog([0, 1, 2], [3, 3, 3], 10, 4)
    ds = build_regression_dataset(test, cfg, RiskCurveSpec(3), kept, drop_tail=False)
    assert ds.kept_types == kept and not ds.X.any()
