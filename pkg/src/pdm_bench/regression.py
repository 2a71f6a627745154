"""Risk-regression view of an event log.

Days are binarized per kept event type, runs of consecutive presence are
collapsed to their first day, and each sample ORs ``N`` such day rows. The
label is a sigmoid risk of the sample's last day relative to the next target.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .classification import WindowSpec
from .logmodel import Episode, EventLog

ALARM_GRID = tuple(round(0.1 + 0.05 * i, 2) for i in range(17))


@dataclass(frozen=True)
class RiskCurveSpec:
    midpoint: float
    steepness: float = 0.7

    def __post_init__(self):
        if self.midpoint < 0 or not self.steepness > 0:
            raise ValueError("need midpoint >= 0 and steepness > 0")


CURVES = {
    "A": RiskCurveSpec(16, 0.7),
    "B": RiskCurveSpec(6, 0.7),
    "C": RiskCurveSpec(16, 0.7),
    "D": RiskCurveSpec(6, 0.7),
}


@dataclass(frozen=True)
class DayMatrix:
    matrix: np.ndarray  # (days, len(kept_types)) uint8
    kept_types: tuple[int, ...]


@dataclass(frozen=True)
class RegressionConfig:
    """Grouping of ``N`` days every ``step`` days.

    ``lead`` days must follow each group inside the log so that anchors line
    up with the classification slices of the paired window (``lead = Z + Y``).
    """

    N: int
    step: int
    alarm_threshold: float = 0.5
    rare_min_ratio: float = 0.5
    frequent_max_day_fraction: float = 0.3
    lead: int = 0

    def __post_init__(self):
        if self.N < 1 or self.step < 1 or self.lead < 0:
            raise ValueError("need N >= 1, step >= 1 and lead >= 0")
        if not 0 < self.alarm_threshold < 1:
            raise ValueError("alarm_threshold must lie in (0, 1)")

    @classmethod
    def for_window(cls, window: WindowSpec, **kw) -> "RegressionConfig":
        return cls(N=window.ow_len, step=window.step, lead=window.Z + window.Y, **kw)


def prune_rare(log: EventLog, target_count: int, rare_min_ratio: float) -> frozenset:
    """Types occurring at least ``rare_min_ratio * target_count`` times (target always kept)."""
    if target_count <= 0:
        raise ValueError("target_count must be positive")
    counts = np.bincount(log.types, minlength=log.ft)
    keep = counts >= rare_min_ratio * target_count
    keep[log.target_type] = True
    return frozenset(np.flatnonzero(keep).tolist())


def prune_frequent(log: EventLog, frequent_max_day_fraction: float) -> frozenset:
    """Types present on at most ``frequent_max_day_fraction`` of all days."""
    present = np.zeros(log.ft, dtype=np.int64)
    if len(log):
        pairs = np.unique(log.days * log.ft + log.types)
        present = np.bincount(pairs % log.ft, minlength=log.ft)
    keep = present <= frequent_max_day_fraction * log.horizon_days
    return frozenset(np.flatnonzero(keep).tolist())


def select_types(log: EventLog, cfg: RegressionConfig) -> tuple[int, ...]:
    """Kept feature types of a training log: both pruning rules, target removed."""
    n_targets = max(1, len(log.target_days()))
    kept = prune_rare(log, n_targets, cfg.rare_min_ratio) & prune_frequent(
        log, cfg.frequent_max_day_fraction)
    return tuple(sorted(kept - {log.target_type}))


def binarize_days(log: EventLog, kept_types) -> DayMatrix:
    kept = tuple(int(t) for t in kept_types)
    if log.target_type in kept:
        raise ValueError("kept_types must not include the target type")
    col = np.full(max(log.ft, 1), -1, dtype=np.int64)
    col[list(kept)] = np.arange(len(kept))
    m = np.zeros((log.horizon_days, len(kept)), dtype=np.uint8)
    c = col[log.types] if len(log) else np.empty(0, dtype=np.int64)
    sel = c >= 0
    m[log.days[sel], c[sel]] = 1
    return DayMatrix(m, kept)


def collapse_consecutive(m: DayMatrix) -> DayMatrix:
    """Keep only the first day of every run of consecutive ones per column."""
    a = m.matrix
    prev = np.zeros_like(a)
    prev[1:] = a[:-1]
    return DayMatrix((a & (1 - prev)).astype(np.uint8), m.kept_types)


def risk_label(day: int, episode: Episode, curve: RiskCurveSpec) -> float:
    """``1 / (1 + exp(s * (d - m)))`` with ``d`` the days left to the target."""
    start, target = episode
    if not start <= day <= target:
        raise ValueError(f"day {day} outside episode [{start}, {target}]")
    return float(expit(-curve.steepness * ((target - day) - curve.midpoint)))


def risk_curve(d, curve: RiskCurveSpec) -> np.ndarray:
    """Vectorized risk for days-to-target ``d``."""
    return expit(-curve.steepness * (np.asarray(d, dtype=float) - curve.midpoint))


@dataclass
class RegDataset:
    X: np.ndarray
    y: np.ndarray  # NaN where no target follows the anchor
    anchors: np.ndarray
    kept_types: tuple[int, ...]


def group_anchors(horizon: int, cfg: RegressionConfig) -> np.ndarray:
    last_start = horizon - (cfg.N + cfg.lead)
    if last_start < 0:
        return np.empty(0, dtype=np.int64)
    return np.arange(0, last_start + 1, cfg.step, dtype=np.int64) + cfg.N - 1


def build_regression_dataset(log: EventLog, cfg: RegressionConfig, curve: RiskCurveSpec,
                             kept_types, drop_tail: bool = True) -> RegDataset:
    """OR-aggregated collapsed day rows per ``N``-day group, labeled with risk.

    ``kept_types`` must come from the training log. With ``drop_tail`` the
    groups ending after the last target (no label) are removed.
    """
    dm = collapse_consecutive(binarize_days(log, kept_types))
    anchors = group_anchors(log.horizon_days, cfg)
    k = len(dm.kept_types)
    if len(anchors) == 0:
        return RegDataset(np.zeros((0, k)), np.zeros(0), anchors, dm.kept_types)
    cum = np.vstack([np.zeros((1, k), dtype=np.int64), np.cumsum(dm.matrix, axis=0, dtype=np.int64)])
    X = ((cum[anchors + 1] - cum[anchors + 1 - cfg.N]) > 0).astype(float)

    targets = log.target_days()
    idx = np.searchsorted(targets, anchors, side="left")
    has = idx < len(targets)
    y = np.full(len(anchors), np.nan)
    y[has] = risk_curve(targets[idx[has]] - anchors[has], curve)
    if drop_tail:
        X, y, anchors = X[has], y[has], anchors[has]
    return RegDataset(X, y, anchors, dm.kept_types)


def alarm(score, threshold: float):
    """1 where ``score >= threshold``."""
    out = np.asarray(score) >= threshold
    return out.astype(np.int8) if out.ndim else int(out)
