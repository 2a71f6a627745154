"""Vote combiners for three member predictors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

GRID_STEP = 0.05
UNIFORM = np.full(3, 1.0 / 3.0)
KINDS = ("simple", "weighted", "dynamic_weighted", "dynamic_threshold")


@dataclass(frozen=True)
class EnsembleStrategy:
    kind: str
    weights: tuple[float, float, float] | None = None
    threshold: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if (self.weights is not None) != (self.kind in ("weighted", "dynamic_weighted")):
            raise ValueError("weights are required exactly for weighted kinds")
        if (self.threshold is not None) != (self.kind == "dynamic_threshold"):
            raise ValueError("threshold is required exactly for dynamic_threshold")
        if self.threshold is not None and not 1 <= self.threshold <= 3:
            raise ValueError("threshold must lie in [1, 3]")

    def apply(self, votes) -> np.ndarray:
        if self.kind == "simple":
            return simple_majority(votes)
        if self.kind == "dynamic_threshold":
            return threshold_vote(votes, self.threshold)
        return weighted_vote(votes, self.weights)


def _votes(votes) -> np.ndarray:
    v = np.asarray(votes).astype(np.int64)
    if v.shape[-1] != 3:
        raise ValueError("expected exactly three member votes")
    return v


def threshold_vote(votes, t: int):
    out = _votes(votes).sum(axis=-1) >= t
    return out.astype(np.int8) if out.ndim else int(out)


def simple_majority(votes):
    """1 iff at least 2 of 3 members vote 1."""
    return threshold_vote(votes, 2)


def f1_weights(member_f1) -> np.ndarray:
    f = np.asarray(member_f1, dtype=float)
    if np.any(f < 0) or f.sum() <= 0:
        raise ValueError("need non-negative member scores with a positive sum")
    return f / f.sum()


def weighted_vote(votes, weights):
    """1 iff the weighted vote strictly exceeds 0.5."""
    w = np.asarray(weights, dtype=float)
    out = _votes(votes) @ w > 0.5
    return out.astype(np.int8) if out.ndim else int(out)


def simplex_grid(step: float = GRID_STEP) -> np.ndarray:
    """Weight triples on the simplex at ``step`` resolution plus the uniform triple."""
    n = int(round(1.0 / step))
    pts = [(i / n, j / n, (n - i - j) / n) for i in range(n + 1) for j in range(n + 1 - i)]
    pts.append(tuple(UNIFORM))
    return np.array(pts)


def _distinct_outputs(votes: np.ndarray, grid: np.ndarray):
    """Group grid weights by the alarm pattern they induce on the 8 vote codes."""
    codes = np.array([[(c >> 2) & 1, (c >> 1) & 1, c & 1] for c in range(8)])
    table = (codes @ grid.T > 0.5)  # (8, grid)
    keys = np.packbits(table, axis=0)[0]
    return keys, table


def fit_dynamic_weights(votes, f1_of: Callable[[np.ndarray], float],
                        step: float = GRID_STEP) -> tuple[np.ndarray, float]:
    """Grid weights maximizing ``f1_of(weighted_vote(votes, w))``.

    Ties resolve to the candidate nearest the uniform triple (then grid order).
    """
    v = _votes(votes)
    grid = simplex_grid(step)
    keys, table = _distinct_outputs(v, grid)
    code = v[:, 0] * 4 + v[:, 1] * 2 + v[:, 2]
    score_of: dict[int, float] = {}
    for g, key in enumerate(keys.tolist()):
        if key not in score_of:
            score_of[key] = float(f1_of(table[code, g].astype(np.int8)))
    scores = np.array([score_of[k] for k in keys.tolist()])
    best = scores.max()
    cand = np.flatnonzero(scores == best)
    dist = np.abs(grid[cand] - UNIFORM).sum(axis=1)
    pick = cand[np.argmin(dist)]
    return grid[pick], float(best)


def best_dynamic_threshold(votes, f1_of: Callable[[np.ndarray], float]) -> tuple[int, float]:
    """Vote-count cutoff in {1, 2, 3} with the best F1; ties go to the larger cutoff."""
    best_t, best = 3, -1.0
    for t in (3, 2, 1):
        s = float(f1_of(threshold_vote(votes, t)))
        if s > best:
            best_t, best = t, s
    return best_t, best


def mean_risk(scores) -> np.ndarray:
    """Regression ensemble: average member risk before thresholding."""
    return np.asarray(scores, dtype=float).mean(axis=-1)
