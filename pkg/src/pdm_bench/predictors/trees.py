"""Histogram regression trees, gradient boosting and random forests.

Trees are grown on pre-binned features. A feature with at most ``max_bins``
distinct training values gets one bin per value, so split search is exact
for it; otherwise bin edges are quantiles. A split sends ``x <= threshold``
left. Leaf values are Newton steps ``-G / (H + lambda)``, which for unit
hessians and ``lambda = 0`` is the mean residual, so split gain reduces to
the squared-error (variance) reduction.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp


class Binner:
    """Per-feature value -> bin index mapping learned from training data."""

    def __init__(self, max_bins: int = 64):
        if not 2 <= max_bins <= 256:
            raise ValueError("max_bins must be in [2, 256]")
        self.max_bins = max_bins
        self.edges: list[np.ndarray] = []

    def fit(self, X: np.ndarray) -> "Binner":
        self.edges = []
        for col in X.T:
            u = np.unique(col)
            if len(u) > self.max_bins:
                q = np.quantile(col, np.linspace(0, 1, self.max_bins + 1)[1:], method="higher")
                u = np.unique(q)
            self.edges.append(u)
        return self

    @property
    def n_bins(self) -> int:
        return max((len(e) for e in self.edges), default=1)

    def transform(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape, dtype=np.uint8)
        for j, e in enumerate(self.edges):
            out[:, j] = np.minimum(np.searchsorted(e, X[:, j], side="left"), len(e) - 1)
        return out


@dataclass
class Tree:
    """Flat binary tree; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def depth(self) -> int:
        def rec(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(rec(self.left[i]), rec(self.right[i]))

        return rec(0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                break
            r = rows[inner]
            n = node[inner]
            go_left = X[r, f[inner]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])
        return self.value[node]

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(np.array(d["feature"], dtype=np.int64), np.array(d["threshold"], dtype=float),
                   np.array(d["left"], dtype=np.int64), np.array(d["right"], dtype=np.int64),
                   np.array(d["value"], dtype=float))


class _Grower:
    """Grows trees on binned data ``Xb`` for gradients ``g`` and hessians ``h``.

    Histograms are ragged: feature ``f`` owns ``len(edges[f])`` consecutive
    slots starting at ``starts[f]``, so features with few distinct values cost
    few slots. Constant features are never split on and are left out.
    """

    BINCOUNT_MAX = 20000

    def __init__(self, Xb, edges, max_depth, min_leaf, reg_lambda, col_sample=None, rng=None):
        lens = np.array([len(e) for e in edges], dtype=np.int64)
        self.active = np.flatnonzero(lens > 1)
        self.edges = [edges[f] for f in self.active]
        self.lens = lens[self.active]
        self.starts = np.concatenate([[0], np.cumsum(self.lens)[:-1]]).astype(np.int64)
        self.Xb = np.ascontiguousarray(Xb[:, self.active])
        n, d = self.Xb.shape
        total = int(self.lens.sum())
        self.seg_start = np.repeat(self.starts, self.lens)
        self.flat = self.Xb.astype(np.int64) + self.starts[None, :]
        cols = self.flat.ravel()
        # One-hot bin membership; histograms of a node are onehot[rows].T @ [g, h, 1].
        self.onehot = sp.csr_matrix((np.ones(n * d), cols, np.arange(0, n * d + 1, d)), shape=(n, total))
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.reg_lambda = reg_lambda
        self.col_sample = col_sample
        self.rng = rng
        self.unit_hessian = False

    def _hist(self, rows, g, h) -> np.ndarray:
        """(slots x 3) sums of g, h and counts per bin over ``rows``."""
        d = self.Xb.shape[1]
        if len(rows) * d <= self.BINCOUNT_MAX:
            # Small nodes: plain bincounts avoid the sparse indexing overhead.
            idx = self.flat[rows].ravel()
            T = self.onehot.shape[1]
            hist = np.empty((T, 3))
            hist[:, 0] = np.bincount(idx, weights=np.repeat(g[rows], d), minlength=T)
            hist[:, 2] = np.bincount(idx, minlength=T)
            if self.unit_hessian:
                hist[:, 1] = hist[:, 2]
            else:
                hist[:, 1] = np.bincount(idx, weights=np.repeat(h[rows], d), minlength=T)
            return hist
        w = np.ones((len(rows), 3))
        w[:, 0] = g[rows]
        if not self.unit_hessian:
            w[:, 1] = h[rows]
        return np.asarray(self.onehot[rows].T @ w)

    def _best_split(self, rows, g, h, G, H, hist=None):
        d = self.Xb.shape[1]
        if d == 0:
            return None
        if self.col_sample is not None and self.col_sample < d:
            feats = np.sort(self.rng.choice(d, self.col_sample, replace=False))
            lens = self.lens[feats]
            starts = np.concatenate([[0], np.cumsum(lens)[:-1]])
            idx = (self.Xb[rows][:, feats] + starts[None, :]).ravel()
            T = int(starts[-1] + lens[-1])
            d_f = len(lens)
            hist = np.empty((T, 3))
            hist[:, 0] = np.bincount(idx, weights=np.repeat(g[rows], d_f), minlength=T)
            hist[:, 2] = np.bincount(idx, minlength=T)
            if self.unit_hessian:
                hist[:, 1] = hist[:, 2]
            else:
                hist[:, 1] = np.bincount(idx, weights=np.repeat(h[rows], d_f), minlength=T)
        else:
            feats = None
            lens, starts = self.lens, self.starts
            if hist is None:
                hist = self._hist(rows, g, h)
        n = len(rows)
        # Left-child sums per candidate bin: cumulative sums restarted per
        # feature, taken from a zero-padded running sum.
        T = hist.shape[0]
        c = np.empty((T + 1, 3))
        c[0] = 0.0
        np.cumsum(hist, axis=0, out=c[1:])
        seg = self.seg_start if feats is None else np.repeat(starts, lens)
        left_sums = c[1:] - c[seg]
        GL, HL, CL = left_sums[:, 0], left_sums[:, 1], left_sums[:, 2]
        GR = G - GL
        HR = H - HL
        CR = n - CL
        lam = self.reg_lambda
        valid = (CL >= self.min_leaf - 0.5) & (CR >= self.min_leaf - 0.5)
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = GL * GL / (HL + lam) + GR * GR / (HR + lam) - G * G / (H + lam)
        gain = np.where(valid, gain, -np.inf)
        flat = int(np.argmax(gain))
        best = gain[flat]
        tol = 1e-10 * max(1.0, abs(G * G / (H + lam)))
        if not np.isfinite(best) or best <= tol:
            return None
        fi = int(np.searchsorted(starts, flat, side="right") - 1)
        b = flat - int(starts[fi])
        local = int(feats[fi]) if feats is not None else fi
        go_left = self.Xb[rows, local] <= b
        return int(self.active[local]), float(self.edges[local][b]), rows[go_left], rows[~go_left]

    def grow(self, g, h, rows, unit_hessian=False) -> Tree:
        self.unit_hessian = unit_hessian
        feature, threshold, left, right, value = [], [], [], [], []
        lam = self.reg_lambda

        def new_node(rows_):
            G = float(g[rows_].sum())
            H = float(h[rows_].sum()) if not unit_hessian else float(len(rows_))
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(-G / (H + lam) if H + lam > 0 else 0.0)
            return len(feature) - 1, G, H

        # Without column sampling a child's histogram is its parent's minus
        # its sibling's, so only the smaller child is accumulated directly.
        subtract = self.col_sample is None or self.col_sample >= self.Xb.shape[1]
        root, G, H = new_node(rows)
        stack = [(root, rows, 0, G, H, None)]
        while stack:
            node, r, depth, G, H, hist = stack.pop()
            if depth >= self.max_depth or len(r) < 2 * self.min_leaf:
                continue
            gr = g[r]
            if unit_hessian and gr.max() == gr.min():
                continue
            if subtract and hist is None:
                hist = self._hist(r, g, h)
            split = self._best_split(r, g, h, G, H, hist)
            if split is None:
                continue
            f, thr, lr, rr = split
            li, lG, lH = new_node(lr)
            ri, rG, rH = new_node(rr)
            feature[node] = f
            threshold[node] = thr
            left[node] = li
            right[node] = ri
            lh = rh = None
            if subtract and depth + 1 < self.max_depth:
                if len(lr) <= len(rr):
                    lh = self._hist(lr, g, h)
                    rh = hist - lh
                else:
                    rh = self._hist(rr, g, h)
                    lh = hist - rh
            stack.append((ri, rr, depth + 1, rG, rH, rh))
            stack.append((li, lr, depth + 1, lG, lH, lh))
        return Tree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=float),
                    np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                    np.array(value, dtype=float))


def fit_tree(X, residuals, max_depth=4, min_leaf=2, max_bins=64, hessian=None, reg_lambda=0.0) -> Tree:
    """Least-squares regression tree on ``residuals`` (or a Newton tree with ``hessian``)."""
    X = np.asarray(X, dtype=float)
    binner = Binner(max_bins).fit(X)
    grower = _Grower(binner.transform(X), binner.edges, max_depth, min_leaf, reg_lambda)
    r = np.asarray(residuals, dtype=float)
    rows = np.arange(len(r))
    if hessian is None:
        return grower.grow(-r, np.ones_like(r), rows, unit_hessian=True)
    return grower.grow(-r, np.asarray(hessian, dtype=float), rows)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


@dataclass
class BoostState:
    """Additive tree ensemble ``F(x) = base + learning_rate * sum(tree(x))``."""

    base: float
    learning_rate: float = 0.1
    objective: str = "squared"  # or "logistic"
    max_depth: int = 4
    min_leaf: int = 2
    max_bins: int = 64
    reg_lambda: float = 0.0
    trees: list[Tree] = field(default_factory=list)

    def raw(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.full(len(X), self.base)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out

    def predict(self, X) -> np.ndarray:
        F = self.raw(X)
        if self.objective == "logistic":
            return sigmoid(F)
        return np.clip(F, 0.0, 1.0)


def gbt_round(state: BoostState, X, residuals, hessian=None) -> BoostState:
    """Fit one tree to ``residuals`` and return a state with it appended."""
    tree = fit_tree(X, residuals, state.max_depth, state.min_leaf, state.max_bins, hessian,
                    state.reg_lambda if hessian is not None else 0.0)
    return replace(state, trees=state.trees + [tree])


def _logit(p):
    p = min(max(p, 1e-6), 1 - 1e-6)
    return float(np.log(p / (1 - p)))


def fit_gbt(X, y, rounds=200, learning_rate=0.1, max_depth=4, objective="squared",
            min_leaf=2, max_bins=64, reg_lambda=None) -> BoostState:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if reg_lambda is None:
        reg_lambda = 1.0 if objective == "logistic" else 0.0
    base = _logit(y.mean()) if objective == "logistic" else float(y.mean())
    state = BoostState(base, learning_rate, objective, max_depth, min_leaf, max_bins, reg_lambda)
    binner = Binner(max_bins).fit(X)
    Xb = binner.transform(X)
    grower = _Grower(Xb, binner.edges, max_depth, min_leaf, reg_lambda)
    rows = np.arange(len(y))
    F = np.full(len(y), base)
    trees = []
    for _ in range(rounds):
        if objective == "logistic":
            p = sigmoid(F)
            tree = grower.grow(p - y, np.maximum(p * (1 - p), 1e-12), rows)
        else:
            tree = grower.grow(F - y, None, rows, unit_hessian=True)
        trees.append(tree)
        F = F + learning_rate * tree.predict(X)
    state.trees = trees
    return state


@dataclass
class Forest:
    trees: list[Tree]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.clip(np.mean([t.predict(X) for t in self.trees], axis=0), 0.0, 1.0)


def fit_forest(X, y, trees=200, max_depth=12, feature_subset="sqrt", bootstrap=True,
               min_leaf=1, max_bins=64, seed=0) -> Forest:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if feature_subset == "sqrt":
        col_sample = max(1, int(np.sqrt(d)))
    elif feature_subset is None:
        col_sample = None
    else:
        col_sample = max(1, min(d, int(feature_subset)))
    rng = np.random.default_rng(seed)
    binner = Binner(max_bins).fit(X)
    grower = _Grower(binner.transform(X), binner.edges, max_depth, min_leaf, 0.0, col_sample, rng)
    out = []
    g = -y
    for _ in range(trees):
        rows = np.sort(rng.integers(0, n, n)) if bootstrap else np.arange(n)
        out.append(grower.grow(g, None, rows, unit_hessian=True))
    return Forest(out)
