"""Feature reduction: ReliefF ranking, centered PCA and the kept-fraction search."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import predictors as P

SHRINK = 0.8
METHODS = ("none", "relieff", "pca")


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class ReliefFConfig:
    k_neighbors: int = 10
    sample_count: int | None = None  # None: every training sample
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.sample_count is not None and self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d2 = np.einsum("ij,ij->i", A, A)[:, None] + np.einsum("ij,ij->i", B, B)[None, :] - 2.0 * A @ B.T
    return np.maximum(d2, 0.0)


def relieff_weights(X, y, cfg: ReliefFConfig = ReliefFConfig()) -> np.ndarray:
    """ReliefF quality estimate per feature, in [-1, 1].

    Neighbours are Euclidean on z-scored features (ties go to the lower
    sample index); per-feature differences are range-normalized. When fewer
    than ``k`` hits or misses exist, all available ones are averaged.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).reshape(-1).astype(bool)
    n, d = X.shape
    if y.all() or not y.any():
        raise ReductionError("ReliefF needs both classes")
    lo, hi = X.min(axis=0), X.max(axis=0)
    rng_ = hi - lo
    live = rng_ > 0
    w = np.zeros(d)
    if not live.any():
        return w
    Xl = X[:, live]
    Xn = (Xl - lo[live]) / rng_[live]  # diff(f, a, b) = |Xn[a, f] - Xn[b, f]|
    std = Xl.std(axis=0)
    Z = (Xl - Xl.mean(axis=0)) / np.where(std > 0, std, 1.0)

    if cfg.sample_count is None or cfg.sample_count >= n:
        inst = np.arange(n)
    else:
        inst = np.sort(np.random.default_rng(cfg.seed).choice(n, cfg.sample_count, replace=False))
    m = len(inst)
    acc = np.zeros(live.sum())
    for lo_i in range(0, m, 128):
        rows = inst[lo_i:lo_i + 128]
        D = _sq_dists(Z[rows], Z)
        D[np.arange(len(rows)), rows] = np.inf
        for r, i in enumerate(rows):
            order = np.argsort(D[r], kind="stable")
            order = order[order != i]
            same = y[order] == y[i]
            hits = order[same][:cfg.k_neighbors]
            misses = order[~same][:cfg.k_neighbors]
            if len(hits):
                acc -= np.abs(Xn[hits] - Xn[i]).mean(axis=0)
            acc += np.abs(Xn[misses] - Xn[i]).mean(axis=0)
    w[live] = acc / m
    return w


@dataclass(frozen=True)
class Projection:
    mean: np.ndarray
    basis: np.ndarray  # (components, dims), orthonormal rows
    kept: int
    variances: np.ndarray
    degenerate: bool = False

    def with_kept(self, kept: int) -> "Projection":
        if not 0 <= kept <= self.basis.shape[0]:
            raise ReductionError(f"kept={kept} outside [0, {self.basis.shape[0]}]")
        return Projection(self.mean, self.basis, kept, self.variances, self.degenerate)


def pca_fit(X) -> Projection:
    """Centered PCA via thin SVD; each component's largest-magnitude entry is positive."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if n < 2:
        raise ReductionError("PCA needs at least 2 samples")
    mean = X.mean(axis=0)
    Xc = X - mean
    if not np.any(Xc):
        return Projection(mean, np.eye(d), d, np.zeros(d), degenerate=True)
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    lead = np.argmax(np.abs(vt), axis=1)
    signs = np.sign(vt[np.arange(len(vt)), lead])
    vt = vt * signs[:, None]
    return Projection(mean, vt, vt.shape[0], s ** 2 / (n - 1))


def pca_transform(p: Projection, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != p.mean.shape[0]:
        raise ReductionError(f"expected {p.mean.shape[0]} columns, got shape {X.shape}")
    return (X - p.mean) @ p.basis[:p.kept].T


def reduction_grid(d: int, min_features: int = 2) -> list[float]:
    """Fractions ``0.8**k`` for every k with ``d * 0.8**k >= min_features``."""
    out = []
    k = 0
    while d * SHRINK ** k >= min_features or k == 0:
        out.append(SHRINK ** k)
        k += 1
    return out


def kept_count(d: int, fraction: float) -> int:
    return max(1, int(round(d * fraction)))


class ReductionChoice(NamedTuple):
    method: str
    kept_fraction: float


@dataclass(frozen=True)
class Reducer:
    """Fitted reducer: column subset (ReliefF / none) or projection (PCA)."""

    method: str
    n_features: int
    columns: np.ndarray | None = None
    projection: Projection | None = None

    @property
    def width(self) -> int:
        if self.method == "pca":
            return self.projection.kept
        return len(self.columns) if self.columns is not None else self.n_features

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ReductionError(f"expected {self.n_features} columns, got shape {X.shape}")
        if self.method == "pca":
            return pca_transform(self.projection, X)
        if self.columns is None:
            return X
        return X[:, self.columns]

    def to_json(self) -> str:
        d: dict = {"method": self.method, "n_features": self.n_features}
        if self.columns is not None:
            d["columns"] = self.columns.tolist()
        if self.projection is not None:
            p = self.projection
            d["projection"] = {"mean": p.mean.tolist(), "basis": p.basis[:p.kept].tolist(),
                               "kept": p.kept, "variances": p.variances[:p.kept].tolist(),
                               "degenerate": p.degenerate}
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "Reducer":
        d = json.loads(text)
        cols = np.array(d["columns"], dtype=np.int64) if "columns" in d else None
        proj = None
        if "projection" in d:
            p = d["projection"]
            basis = np.array(p["basis"], dtype=float).reshape(p["kept"], d["n_features"])
            proj = Projection(np.array(p["mean"]), basis, p["kept"], np.array(p["variances"]),
                              p["degenerate"])
        return cls(d["method"], d["n_features"], cols, proj)


def relieff_ranking(weights: np.ndarray) -> np.ndarray:
    """Feature indices by descending weight; equal weights keep index order."""
    return np.argsort(-np.asarray(weights), kind="stable")


@dataclass
class SearchResult:
    choice: ReductionChoice
    reducer: Reducer
    score: float
    curve: list[tuple[float, int, float]]  # (fraction, kept, score)
    predictions: np.ndarray  # best model's scores on the validation rows


def search_reduction(train, val, predictor_cfg: P.PredictorConfig, method: str,
                     scorer: Callable[[np.ndarray], float] | None = None,
                     relieff_cfg: ReliefFConfig = ReliefFConfig(), relieff_labels=None,
                     weights=None, projection: Projection | None = None,
                     min_features: int = 2) -> SearchResult:
    """Pick the kept fraction maximizing ``scorer(predict(val))``.

    ``train`` and ``val`` are ``(X, y)`` pairs. Without ``scorer`` the score
    is sample-level F1 of 0.5 decisions against ``val`` labels. Equal scores
    resolve to fewer kept dimensions. ``weights``/``projection`` may be
    passed in to reuse an earlier fit on the same training matrix.
    """
    if method not in ("relieff", "pca"):
        raise ReductionError(f"search needs method relieff or pca, got {method!r}")
    Xtr, ytr = np.asarray(train[0], dtype=float), np.asarray(train[1], dtype=float)
    Xva = np.asarray(val[0], dtype=float)
    d = Xtr.shape[1]
    if scorer is None:
        if val[1] is None:
            raise ReductionError("validation labels or a scorer are required")
        yva = np.asarray(val[1], dtype=float)
        scorer = lambda s: _sample_f1(s >= 0.5, yva >= 0.5)  # noqa: E731

    if method == "relieff":
        if weights is None:
            labels = ytr if relieff_labels is None else relieff_labels
            weights = relieff_weights(Xtr, labels, relieff_cfg)
        ranking = relieff_ranking(weights)
        limit = d
    else:
        if projection is None:
            projection = pca_fit(Xtr)
        limit = projection.basis.shape[0]

    seen: dict[int, float] = {}
    for f in reduction_grid(d, min_features):
        kept = min(kept_count(d, f), limit)
        seen.setdefault(kept, f)  # larger fraction first, so keep the first one

    best = None
    curve = []
    for kept, f in sorted(seen.items()):
        if method == "relieff":
            reducer = Reducer("relieff", d, columns=np.sort(ranking[:kept]))
        else:
            reducer = Reducer("pca", d, projection=projection.with_kept(kept))
        model = P.fit(predictor_cfg, reducer.transform(Xtr), ytr)
        pred = P.predict(model, reducer.transform(Xva))
        s = float(scorer(pred))
        curve.append((f, kept, s))
        if best is None or s > best[0]:
            best = (s, f, reducer, pred)
    s, f, reducer, pred = best
    curve.sort(key=lambda c: -c[0])
    return SearchResult(ReductionChoice(method, f), reducer, s, curve, pred)


def _sample_f1(pred, truth) -> float:
    tp = float(np.sum(pred & truth))
    fp = float(np.sum(pred & ~truth))
    fn = float(np.sum(~pred & truth))
    return 2 * tp / (2 * tp + fp + fn) if tp else 0.0
