"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

The three experiment fixtures regenerate DS1 instances for seeds 0-9 and take
roughly a quarter of an hour together on one core.
"""
import filecmp
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from pdm_bench import runner, selftest
from pdm_bench.config import ExperimentConfig
from pdm_bench.ensembles import best_dynamic_threshold, simple_majority
from pdm_bench.evaluation import EvalContext, PeriodSpec
from pdm_bench.logmodel import Episode
from pdm_bench.regression import RiskCurveSpec, risk_label

pytestmark = pytest.mark.slow

SEEDS = tuple(range(10))


def verdict(capsys, n, name, ok, info=""):
    with capsys.disabled():
        print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}  {name}" + (f"  ({info})" if info else ""))
    assert ok, f"criterion {n} failed: {info}"


def timed(cfg):
    runner.instance.cache_clear()
    t0 = time.perf_counter()
    table = runner.run_experiment(cfg)
    return table, time.perf_counter() - t0


@pytest.fixture(scope="module")
def out_root(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="module")
def baselines_a(out_root):
    cfg = ExperimentConfig(seeds=SEEDS, settings=("A",), algorithms=(), output=str(out_root / "base1"))
    return cfg, *timed(cfg)


@pytest.fixture(scope="module")
def class_gbt(out_root):
    cfg = ExperimentConfig(seeds=SEEDS, settings=("A", "B", "C", "D"), algorithms=("gbt",),
                           reductions=("relieff",), output=str(out_root / "gbt1"))
    return cfg, *timed(cfg)


@pytest.fixture(scope="module")
def class_b():
    cfg = ExperimentConfig(seeds=SEEDS, settings=("B",), algorithms=("rf", "knn"), reductions=("relieff",))
    return runner.run_experiment(cfg)


@pytest.fixture(scope="module")
def reg_b():
    cfg = ExperimentConfig(seeds=SEEDS, settings=("B",), pipeline="reg",
                           algorithms=("gbt", "rf", "knn"), reductions=("relieff",))
    return runner.run_experiment(cfg)


def test_criterion_1_baselines(capsys, baselines_a):
    _, table, secs = baselines_a
    at = table.get("DS1", "A", "all_true").mean
    rnd = table.get("DS1", "A", "random").mean
    ok = abs(at - 0.464) <= 0.08 and abs(rnd - 0.520) <= 0.10 and secs < 60
    verdict(capsys, 1, "baseline F1 on DS1/A", ok,
            f"all_true {at:.3f} vs 0.464+-0.08, random {rnd:.3f} vs 0.520+-0.10, {secs:.1f}s")


def test_criterion_2_headline(capsys, class_gbt):
    _, table, secs = class_gbt
    parts, ok = [], secs < 15 * 60
    for s in "ABCD":
        g = table.get("DS1", s, "gbt", "relieff").mean
        r = table.get("DS1", s, "random").mean
        a = table.get("DS1", s, "all_true").mean
        ok &= g > r and g > a and (s not in "AC" or g >= 0.65)
        parts.append(f"{s}: gbt {g:.4f} random {r:.3f} all_true {a:.3f}")
    verdict(capsys, 2, "gbt+ReliefF classification beats baselines", ok,
            "; ".join(parts) + f"; {secs / 60:.1f} min")


def test_criterion_3_regression_gap(capsys, class_gbt, class_b, reg_b):
    cls = {a: class_b.get("DS1", "B", a, "relieff").mean for a in ("rf", "knn")}
    cls["gbt"] = class_gbt[1].get("DS1", "B", "gbt", "relieff").mean
    reg = {a: reg_b.get("DS1", "B", a, "relieff").mean for a in ("gbt", "rf", "knn")}
    best_c, best_r = max(cls.values()), max(reg.values())
    ok = all(not math.isnan(v) for v in (*cls.values(), *reg.values())) and best_r < best_c
    verdict(capsys, 3, "regression below classification on DS1/B", ok,
            f"best regression {best_r:.4f} ({max(reg, key=reg.get)}) vs "
            f"best classification {best_c:.4f} ({max(cls, key=cls.get)})")


def test_criterion_4_ensemble_dominance(capsys):
    rng = np.random.default_rng(2024)
    fails = 0
    for _ in range(500):
        horizon = int(rng.integers(40, 300))
        targets = np.sort(rng.choice(np.arange(5, horizon), int(rng.integers(1, 8)), replace=False))
        eps, start = [], 0
        for t in targets.tolist():
            eps.append(Episode(start, t))
            start = t + 1
        anchors = np.arange(0, horizon, int(rng.integers(1, 6)))
        ctx = EvalContext(anchors, tuple(eps), PeriodSpec(int(rng.integers(1, 17)), int(rng.integers(0, 4))))
        votes = (rng.random((len(anchors), 3)) < rng.uniform(0.05, 0.95, 3)).astype(int)
        _, best = best_dynamic_threshold(votes, ctx.f1)
        fails += best < ctx.f1(simple_majority(votes))
    verdict(capsys, 4, "dynamic threshold >= simple majority", fails == 0, f"{fails}/500 violations")


def test_criterion_5_score_oracle(capsys):
    verdict(capsys, 5, "score equals per-day oracle on 200 cases", selftest.check_score(200, seed=11))


def test_criterion_6_numerics(capsys):
    grad = selftest.check_mlp_gradient()
    ortho, recon = selftest.check_pca()
    pls = selftest.check_pls()
    split = selftest.check_split()
    ok = grad < 1e-4 and ortho < 1e-8 and recon < 1e-8 and pls < 1e-6 and split
    verdict(capsys, 6, "numerical suites", ok,
            f"mlp rel err {grad:.1e}, pca ortho {ortho:.1e} recon {recon:.1e}, "
            f"pls {pls:.1e}, split exact {split}")


def test_criterion_7_sigmoid(capsys):
    ok = True
    for m in (6.0, 16.0, 7.0, 0.0):
        curve = RiskCurveSpec(m, 0.7)
        target = int(2 * m) + 3
        ep = Episode(0, target)
        ok &= abs(risk_label(target - int(m), ep, curve) - 0.5) <= 1e-12
        vals = [risk_label(target - d, ep, curve) for d in range(0, int(2 * m) + 1)]
        ok &= all(b < a for a, b in zip(vals, vals[1:]))
    verdict(capsys, 7, "risk sigmoid midpoint and monotonicity", ok)


def _same_files(a, b, names=None):
    names = names or sorted(p.relative_to(a).as_posix() for p in a.rglob("*") if p.is_file())
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    return names, mismatch + errors


def test_criterion_8_determinism(capsys, out_root, baselines_a, class_gbt):
    cfg, _, _ = class_gbt
    rerun = replace(cfg, settings=("A",), output=str(out_root / "gbt2"))
    runner.instance.cache_clear()
    runner.run_experiment(rerun)
    a_cells = [p.relative_to(out_root / "gbt1").as_posix()
               for p in (out_root / "gbt1" / "cells").glob("DS1__A__*.json")]
    names, bad = _same_files(out_root / "gbt1", out_root / "gbt2", sorted(a_cells))
    base_cfg = replace(baselines_a[0], output=str(out_root / "base2"))
    runner.instance.cache_clear()
    runner.run_experiment(base_cfg)
    names2, bad2 = _same_files(out_root / "base1", out_root / "base2")
    ok = len(names) == 3 and len(names2) >= 5 and not bad and not bad2
    verdict(capsys, 8, "DS1 x A rerun is byte-identical", ok,
            f"{len(names)} gbt/baseline cell files and {len(names2)} baseline-run files compared, "
            f"differences: {bad + bad2}")


def test_criterion_9_resampling(capsys):
    verdict(capsys, 9, "resampling balance and inclusion on 100 datasets", selftest.check_resampling(100, seed=5))
