import math

import numpy as np
import pytest

from pdm_bench.generator import (GenerationError, GeneratorSpec, PatternPlan, PRESETS, WeibullParams,
                                 generate, preset, sample_weibull)
from pdm_bench.logmodel import write_csv


def test_presets_match_table():
    ds1 = preset("DS1")
    assert (ds1.ft, ds1.shuffle, ds1.pl, ds1.min_f, ds1.max_f) == (150, False, 6, 1, 3)
    assert (ds1.s_tr, ds1.s_te, ds1.min_t, ds1.max_t, ds1.min_p, ds1.max_p) == (1094, 730, 1, 5, 1, 2)
    assert (ds1.pc, ds1.pps, ds1.target_count) == (0.9, 0.5, 50)
    ds2 = preset("DS2")
    assert (ds2.pl, ds2.min_f, ds2.max_f, ds2.ft) == (4, 3, 4, 150)
    assert preset("DS3").ft == 1500 and preset("DS3").pl == 6
    ds4 = preset("ds4")
    assert (ds4.ft, ds4.pl, ds4.min_f, ds4.max_f) == (1500, 4, 3, 4)
    assert preset("DS5").shuffle and preset("DS5").pl == 4
    ds6 = preset("DS6")
    assert ds6.target_count == 25 and ds6.shuffle
    assert sorted(PRESETS) == [f"DS{i}" for i in range(1, 7)]


def test_unknown_preset():
    with pytest.raises(KeyError):
        preset("DS7")


@pytest.mark.parametrize("kw", [dict(min_t=3, max_t=2), dict(min_p=0), dict(min_f=0),
                                dict(pl=60), dict(pc=1.5), dict(pps=-0.1)])
def test_spec_invariants(kw):
    with pytest.raises(ValueError):
        GeneratorSpec(**kw)


def test_weibull_params_positive():
    with pytest.raises(ValueError):
        WeibullParams(0.0, 1.0)
    with pytest.raises(ValueError):
        WeibullParams(1.0, -2.0)


def test_weibull_exponential_mean():
    x = sample_weibull(WeibullParams(1.0, 10.0), np.random.default_rng(0), 100_000)
    assert abs(x.mean() - 10.0) / 10.0 < 0.02


def test_weibull_shape2_mean_closed_form():
    p = WeibullParams(2.0, 10.0)
    x = sample_weibull(p, np.random.default_rng(1), 100_000)
    assert abs(x.mean() - 10.0 * math.gamma(1.5)) / p.mean < 0.02
    assert abs(p.mean - 8.862) < 1e-3


def test_weibull_small_u_gives_small_draw():
    class FixedU:
        def random(self, size=None):
            return 1e-12

    assert 0 < sample_weibull(WeibullParams(1.5, 10.0), FixedU()) < 1e-6


def test_generate_deterministic():
    a, pa = generate(preset("DS1"), seed=3)
    b, pb = generate(preset("DS1"), seed=3)
    assert write_csv(a) == write_csv(b)
    assert pa.to_json() == pb.to_json()
    c, _ = generate(preset("DS1"), seed=4)
    assert write_csv(a) != write_csv(c)


@pytest.mark.parametrize("seed", range(5))
def test_ds1_target_count_and_span(seed):
    log, plan = generate(preset("DS1"), seed=seed)
    assert log.horizon_days == 1824
    assert 40 <= len(log.target_days()) <= 60
    assert plan.target_type == log.target_type


def test_target_count_mean_over_seeds():
    counts = [len(generate(preset("DS1"), seed=s)[0].target_days()) for s in range(100)]
    assert abs(np.mean(counts) - 50) / 50 < 0.10


def _check_timing(spec, plan):
    for inst in plan.instances:
        gaps = np.diff(inst.days)
        if not inst.partial:
            assert all(spec.min_p <= g <= spec.max_p for g in gaps)
        if inst.target_day is not None:
            assert spec.min_t <= inst.target_day - inst.days[-1] <= spec.max_t or inst.partial


@pytest.mark.parametrize("name", ["DS1", "DS2", "DS5"])
def test_pattern_geometry(name):
    spec = preset(name)
    log, plan = generate(spec, seed=11)
    fams = [set(f) for f in plan.families]
    assert len(fams) == spec.pl
    for i, f in enumerate(fams):
        assert spec.min_f <= len(f) <= spec.max_f
        assert plan.target_type not in f
        for g in fams[i + 1:]:
            assert not f & g
    _check_timing(spec, plan)
    for inst in plan.instances:
        for t, fam in zip(inst.types, inst.families):
            assert t in plan.families[fam]
        if not spec.shuffle:
            assert inst.families == sorted(inst.families)
    # every emitted pattern event is present in the log
    pairs = set(zip(log.days.tolist(), log.types.tolist()))
    for inst in plan.instances:
        assert all((d, t) in pairs for d, t in zip(inst.days, inst.types))


def test_full_instances_keep_timing_under_shuffle():
    spec = preset("DS5")
    _, plan = generate(spec, seed=2)
    assert any(inst.families != sorted(inst.families) for inst in plan.instances)
    for inst in plan.instances:
        if not inst.decoy and not inst.partial:
            assert spec.min_t <= inst.target_day - max(inst.days) <= spec.max_t
            assert all(spec.min_p <= g <= spec.max_p for g in np.diff(sorted(inst.days)))


def test_partials_and_decoys_ds1():
    spec = preset("DS1")
    log, plan = generate(spec, seed=5)
    real = [i for i in plan.instances if not i.decoy]
    partial = [i for i in real if i.partial]
    assert len(real) == len(log.target_days())
    assert abs(len(partial) - 5) <= 2
    assert all(len(i.removed) == 3 and len(i.days) == 3 for i in partial)
    decoys = [i for i in plan.instances if i.decoy]
    assert len(decoys) + plan.skipped_decoys == 5
    targets = log.target_days()
    for inst in decoys:
        assert not inst.partial and len(inst.days) == spec.pl
        after = targets[(targets > inst.days[-1]) & (targets <= inst.days[-1] + spec.max_t)]
        assert len(after) == 0


def test_clarity_one_has_no_partials_or_decoys():
    _, plan = generate(preset("DS1").replace(pc=1.0), seed=0)
    assert not any(i.partial or i.decoy for i in plan.instances)
    assert plan.skipped_decoys == 0


def test_plan_json_roundtrip():
    _, plan = generate(preset("DS2"), seed=1)
    again = PatternPlan.from_json(plan.to_json())
    assert again == plan


def test_infeasible_geometry_raises():
    spec = GeneratorSpec(ft=40, s_tr=60, s_te=0, pl=12, min_p=5, max_p=5, max_t=5, target_count=10)
    with pytest.raises(GenerationError):
        generate(spec, seed=0)
