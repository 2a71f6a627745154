"""Quick oracle checks runnable from the command line (``pdm-bench selftest``)."""
from __future__ import annotations

import numpy as np

from . import oracles
from .ensembles import best_dynamic_threshold, simple_majority
from .evaluation import EvalContext, PeriodSpec, PredictionTrace, astuple_counts, score
from .logmodel import Episode
from .predictors import PLS, fit_tree
from .predictors.mlp import init_state, loss_and_grads
from .reduction import pca_fit, pca_transform
from .regression import RiskCurveSpec, risk_label
from .resampling import ResamplePlan, resample_indices


def _random_episodes(rng, horizon):
    targets = np.sort(rng.choice(horizon, int(rng.integers(1, 6)), replace=False))
    eps, start = [], 0
    for t in targets.tolist():
        eps.append(Episode(start, t))
        start = t + 1
    return eps


def check_score(cases: int = 200, seed: int = 0) -> bool:
    rng = np.random.default_rng(seed)
    for _ in range(cases):
        horizon = int(rng.integers(20, 300))
        eps = _random_episodes(rng, horizon)
        anchors = np.sort(rng.choice(horizon, int(rng.integers(1, horizon)), replace=False))
        alarms = rng.integers(0, 2, len(anchors))
        Y, Z = int(rng.integers(1, 20)), int(rng.integers(0, 5))
        got = astuple_counts(score(PredictionTrace(anchors, alarms), eps, PeriodSpec(Y, Z)))
        if got != oracles.naive_score(anchors, alarms, eps, Y, Z):
            return False
    return True


def check_mlp_gradient(seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(10, 5))
    y = (rng.random(10) > 0.5).astype(float)
    st = init_state(5, hidden=(8, 6, 8), rate=0.0, seed=seed)
    # Non-zero biases keep every pre-activation away from the ReLU kink at 0,
    # where finite differences and the analytic subgradient legitimately differ.
    for b in st.biases:
        b += rng.uniform(0.05, 0.3, b.shape)
    worst = 0.0
    for loss in ("bce", "mse"):
        _, gw, gb = loss_and_grads(st.weights, st.biases, X, y, loss)
        num = oracles.numeric_gradient(
            lambda: loss_and_grads(st.weights, st.biases, X, y, loss)[0], st.weights + st.biases)
        for a, b in zip(gw + gb, num):
            worst = max(worst, float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)))
    return worst


def check_pca(seed: int = 0) -> tuple[float, float]:
    X = np.random.default_rng(seed).normal(size=(40, 12))
    p = pca_fit(X)
    ortho = float(np.abs(p.basis @ p.basis.T - np.eye(p.basis.shape[0])).max())
    recon = float(np.abs(pca_transform(p, X) @ p.basis + p.mean - X).max())
    return ortho, recon


def check_pls(seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 4))
    y = 0.4 + 0.05 * X[:, 0] - 0.03 * X[:, 2]
    Xt = rng.normal(size=(20, 4))
    yt = 0.4 + 0.05 * Xt[:, 0] - 0.03 * Xt[:, 2]
    return float(np.abs(PLS.fit(X, y).predict(Xt) - yt).max())


def check_split(seed: int = 0) -> bool:
    rng = np.random.default_rng(seed)
    for _ in range(50):
        x = rng.normal(size=int(rng.integers(4, 40)))
        r = rng.normal(size=len(x))
        tree = fit_tree(x[:, None], r, max_depth=1, min_leaf=1)
        v, _ = oracles.exhaustive_split(x, r)
        if tree.feature[0] != 0 or tree.threshold[0] != v:
            return False
    return True


def check_sigmoid() -> bool:
    for m in (0.0, 6.0, 16.0):
        c = RiskCurveSpec(m, 0.7)
        target = int(2 * m) + 5
        if abs(risk_label(target - int(m), Episode(0, target), c) - 0.5) > 1e-12:
            return False
        vals = [risk_label(target - d, Episode(0, target), c) for d in range(0, int(2 * m) + 1)]
        if any(b >= a for a, b in zip(vals, vals[1:])):
            return False
    return True


def check_resampling(cases: int = 100, seed: int = 0) -> bool:
    rng = np.random.default_rng(seed)
    for i in range(cases):
        n = int(rng.integers(4, 80))
        y = (rng.random(n) < rng.uniform(0.1, 0.9)).astype(float)
        if y.all() or not y.any():
            y[0] = 1 - y[0]
        for mode in ("undersample", "oversample"):
            idx = resample_indices(y, ResamplePlan(mode, 1, i))
            if y[idx].sum() * 2 != len(idx):
                return False
            counts = np.bincount(idx, minlength=n)
            if mode == "undersample" and counts.max() > 1:
                return False
            if mode == "oversample" and counts.min() < 1:
                return False
    return True


def check_ensemble_dominance(cases: int = 200, seed: int = 0) -> bool:
    rng = np.random.default_rng(seed)
    for _ in range(cases):
        horizon = int(rng.integers(40, 200))
        eps = _random_episodes(rng, horizon)
        anchors = np.arange(0, horizon, int(rng.integers(1, 5)))
        ctx = EvalContext(anchors, tuple(eps), PeriodSpec(int(rng.integers(2, 12))))
        votes = rng.integers(0, 2, (len(anchors), 3))
        _, best = best_dynamic_threshold(votes, ctx.f1)
        if best < ctx.f1(simple_majority(votes)):
            return False
    return True


def run() -> list[tuple[str, bool, str]]:
    grad = check_mlp_gradient()
    ortho, recon = check_pca()
    pls = check_pls()
    return [
        ("score equals per-day oracle (200 cases)", check_score(), ""),
        ("mlp gradient vs finite differences", grad < 1e-4, f"rel err {grad:.2e}"),
        ("pca orthonormal basis", ortho < 1e-8, f"{ortho:.1e}"),
        ("pca full-rank reconstruction", recon < 1e-8, f"{recon:.1e}"),
        ("pls noiseless linear fit", pls < 1e-6, f"max err {pls:.1e}"),
        ("tree split equals exhaustive scan", check_split(), ""),
        ("risk sigmoid midpoint and monotonicity", check_sigmoid(), ""),
        ("resampling balance and inclusion", check_resampling(), ""),
        ("dynamic threshold dominates majority", check_ensemble_dominance(), ""),
    ]
