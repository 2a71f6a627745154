"""Slow, direct reference implementations used to cross-check the fast code.

Nothing here is used by the pipelines. Each function restates a rule in the
most literal form available (per-day loops, exhaustive scans, brute force).
"""
from __future__ import annotations

import math

import numpy as np


def naive_score(anchors, alarms, episodes, correct_len: int, repair_len: int) -> tuple[int, ...]:
    """(tp, fn, fp, tn, ignored, skipped) by walking every episode day by day.

    Days-to-target ``k = target - day`` decides the period: repair when
    ``k <= repair_len`` (only if ``repair_len > 0``), correct when the next
    ``correct_len`` days before repair (the target day itself joins correct
    when there is no repair), early otherwise.
    """
    alarm_at = {int(a): int(v) for a, v in zip(anchors, alarms)}
    tp = fn = fp = tn = ignored = skipped = 0
    for start, target in episodes:
        needed = correct_len + repair_len + 1 if repair_len > 0 else correct_len + 1
        if target - start + 1 < needed:
            skipped += 1
            continue
        hit = False
        for day in range(start, target + 1):
            if day not in alarm_at:
                continue
            k = target - day
            if repair_len > 0 and k <= repair_len:
                ignored += alarm_at[day]
            elif (repair_len > 0 and k <= repair_len + correct_len) or (repair_len == 0 and k <= correct_len):
                hit = hit or alarm_at[day] == 1
            elif alarm_at[day]:
                fp += 1
            else:
                tn += 1
        if hit:
            tp += 1
        else:
            fn += 1
    return tp, fn, fp, tn, ignored, skipped


def exhaustive_split(x, r):
    """Threshold ``v`` minimizing the summed squared error of ``x <= v`` vs ``x > v``.

    Scans every distinct value but the largest; ties keep the smallest ``v``.
    Returns ``(v, sse)`` or ``None`` when ``x`` is constant.
    """
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    best = None
    for v in np.unique(x)[:-1]:
        left, right = r[x <= v], r[x > v]
        sse = float(((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum())
        if best is None or sse < best[1]:
            best = (float(v), sse)
    return best


def numeric_gradient(f, params: list[np.ndarray], eps: float = 1e-6) -> list[np.ndarray]:
    """Central finite differences of scalar ``f()`` w.r.t. each array in ``params``."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = p[i]
            p[i] = old + eps
            up = f()
            p[i] = old - eps
            down = f()
            p[i] = old
            g[i] = (up - down) / (2 * eps)
        grads.append(g)
    return grads


def naive_relieff(X, y, k: int) -> np.ndarray:
    """ReliefF over every instance with explicit loops (small inputs only)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(bool)
    n, d = X.shape
    lo, hi = X.min(0), X.max(0)
    std = X.std(0)
    Z = (X - X.mean(0)) / np.where(std > 0, std, 1.0)
    w = np.zeros(d)
    for i in range(n):
        dist = [(math.fsum((Z[i] - Z[j]) ** 2), j) for j in range(n) if j != i]
        dist.sort()
        hits = [j for _, j in dist if y[j] == y[i]][:k]
        misses = [j for _, j in dist if y[j] != y[i]][:k]
        for f in range(d):
            span = hi[f] - lo[f]
            if span == 0:
                continue
            if hits:
                w[f] -= sum(abs(X[i, f] - X[j, f]) / span for j in hits) / len(hits) / n
            w[f] += sum(abs(X[i, f] - X[j, f]) / span for j in misses) / len(misses) / n
    return w


def naive_collapse(matrix) -> np.ndarray:
    """Run scan: within each column keep a 1 only when the previous day was 0."""
    m = np.asarray(matrix)
    out = np.zeros_like(m)
    for c in range(m.shape[1]):
        prev = 0
        for r in range(m.shape[0]):
            if m[r, c] and not prev:
                out[r, c] = 1
            prev = m[r, c]
    return out


def naive_threshold_search(votes, f1_of) -> tuple[int, float]:
    """Enumerate cutoffs 1..3 and keep the best, preferring larger cutoffs on ties."""
    results = []
    for t in (1, 2, 3):
        alarms = [1 if sum(row) >= t else 0 for row in np.asarray(votes).tolist()]
        results.append((f1_of(np.array(alarms, dtype=np.int8)), t))
    best = max(r[0] for r in results)
    return max(t for f, t in results if f == best), best


def simplex_search(votes, f1_of, step: float = 0.05):
    """Every simplex grid triple with its weighted-vote F1 (strict > 0.5 rule)."""
    n = int(round(1 / step))
    v = np.asarray(votes, dtype=float)
    out = []
    for i in range(n + 1):
        for j in range(n + 1 - i):
            w = np.array([i / n, j / n, (n - i - j) / n])
            out.append((w, f1_of((v @ w > 0.5).astype(np.int8))))
    return out
