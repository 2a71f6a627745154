"""Sliding observation/prediction windows and window features.

A slice is an observation window (OW) of ``X`` sub-windows of ``M`` days,
followed by a buffer of ``Z`` days and a prediction window (PW) of ``Y`` days.
Its anchor is the last OW day; predictions are attributed to that day.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .logmodel import EventLog

logger = logging.getLogger(__name__)

SENTINEL = -1.0
N_STAT = 5


@dataclass(frozen=True)
class WindowSpec:
    X: int
    M: int
    Y: int
    Z: int = 0
    step: int | None = None

    def __post_init__(self):
        if self.X < 1 or self.M < 1 or self.Y < 1 or self.Z < 0:
            raise ValueError("need X, M, Y >= 1 and Z >= 0")
        if self.step is None:
            object.__setattr__(self, "step", math.ceil(self.Y / 2))
        elif self.step < 1:
            raise ValueError("step must be >= 1")

    @property
    def ow_len(self) -> int:
        return self.X * self.M

    @property
    def span(self) -> int:
        return self.X * self.M + self.Z + self.Y


SETTINGS = {
    "A": WindowSpec(X=4, M=4, Y=16, Z=0),
    "B": WindowSpec(X=3, M=2, Y=6, Z=0),
    "C": WindowSpec(X=4, M=4, Y=16, Z=3),
    "D": WindowSpec(X=3, M=2, Y=6, Z=3),
}


def settings_preset(name: str) -> WindowSpec:
    try:
        return SETTINGS[name.upper()]
    except KeyError:
        raise KeyError(f"unknown setting {name!r}; expected one of A, B, C, D") from None


class WindowSlice(NamedTuple):
    ow_start: int
    ow_end: int
    pw_start: int
    pw_end: int

    @property
    def anchor_day(self) -> int:
        return self.ow_end - 1


@dataclass
class LabeledSample:
    features: np.ndarray
    label: float
    anchor_day: int


def slice_windows(log: EventLog, spec: WindowSpec) -> list[WindowSlice]:
    """All slices starting at day 0 and advancing by ``spec.step``."""
    horizon = log.horizon_days
    if horizon < spec.span:
        logger.warning("horizon %d shorter than window span %d; no slices", horizon, spec.span)
        return []
    slices = []
    for start in range(0, horizon - spec.span + 1, spec.step):
        ow_end = start + spec.ow_len
        pw_start = ow_end + spec.Z
        slices.append(WindowSlice(start, ow_end, pw_start, pw_start + spec.Y))
    return slices


def label_window(slc: WindowSlice, log: EventLog) -> int:
    """1 iff a target event falls inside the prediction window."""
    targets = log.target_days()
    lo = np.searchsorted(targets, slc.pw_start, side="left")
    return int(lo < len(targets) and targets[lo] < slc.pw_end)


def basic_features(slc: WindowSlice, log: EventLog, ft: int, X: int = 1) -> np.ndarray:
    """Per-sub-window event-type counts for ``X`` equal sub-windows, in time order."""
    M = (slc.ow_end - slc.ow_start) // X
    days, types = log.between(slc.ow_start, slc.ow_end)
    out = np.zeros(X * ft)
    sub = (days - slc.ow_start) // M
    np.add.at(out, sub * ft + types, 1.0)
    return out


def statistical_features(slc: WindowSlice, log: EventLog, ft: int) -> np.ndarray:
    """Per type: min/max/mean distance to PW start, mean/std of same-type gaps.

    Absent types get the sentinel in all five slots; types seen once get the
    sentinel in both gap slots.
    """
    out = np.full((ft, N_STAT), SENTINEL)
    days, types = log.between(slc.ow_start, slc.ow_end)
    if len(days) == 0:
        return out.ravel()
    order = np.lexsort((days, types))
    d = days[order]
    t = types[order]
    dist = (slc.pw_start - d).astype(float)
    uniq, first, counts = np.unique(t, return_index=True, return_counts=True)
    out[uniq, 0] = np.minimum.reduceat(dist, first)
    out[uniq, 1] = np.maximum.reduceat(dist, first)
    out[uniq, 2] = np.add.reduceat(dist, first) / counts

    gaps = np.diff(d).astype(float)
    same = t[1:] == t[:-1]
    if same.any():
        gt = t[1:][same]
        gv = gaps[same]
        g_uniq, g_first, g_counts = np.unique(gt, return_index=True, return_counts=True)
        mean = np.add.reduceat(gv, g_first) / g_counts
        sq = np.add.reduceat(gv * gv, g_first) / g_counts
        out[g_uniq, 3] = mean
        out[g_uniq, 4] = np.sqrt(np.maximum(sq - mean * mean, 0.0))
    return out.ravel()


def _jaccard_summary(present: np.ndarray, refs: np.ndarray, exclude: np.ndarray | None = None):
    """(max, mean) Jaccard of each presence row against each reference row."""
    n = present.shape[0]
    if refs.shape[0] == 0:
        return np.zeros((n, 2))
    p = present.astype(float)
    r = refs.astype(float)
    inter = p @ r.T
    union = p.sum(1)[:, None] + r.sum(1)[None, :] - inter
    sim = np.divide(inter, union, out=np.zeros_like(inter), where=union > 0)
    if exclude is None:
        return np.column_stack([sim.max(1), sim.mean(1)])
    out = np.zeros((n, 2))
    for i in range(n):
        keep = ~exclude[i]
        if keep.any():
            out[i] = sim[i, keep].max(), sim[i, keep].mean()
    return out


def similarity_features(slc: WindowSlice, log: EventLog, positive_refs: Sequence[frozenset]) -> np.ndarray:
    """(max, mean) Jaccard similarity of the OW type set to reference sets."""
    days, types = log.between(slc.ow_start, slc.ow_end)
    s = set(types.tolist())
    if not positive_refs:
        return np.zeros(2)
    sims = []
    for ref in positive_refs:
        union = len(s | ref)
        sims.append(len(s & ref) / union if union else 0.0)
    return np.array([max(sims), sum(sims) / len(sims)])


def feature_length(spec: WindowSpec, ft: int) -> int:
    return spec.X * ft + N_STAT * ft + 2


@dataclass
class ClassDataset:
    """Feature matrix with labels and the slices they were built from."""

    X: np.ndarray
    y: np.ndarray
    anchors: np.ndarray
    slices: list[WindowSlice]
    refs: np.ndarray  # presence rows of positive reference OWs

    @property
    def samples(self) -> list[LabeledSample]:
        return [LabeledSample(self.X[i], float(self.y[i]), int(self.anchors[i]))
                for i in range(len(self.y))]


def _presence(log: EventLog, slices: list[WindowSlice]) -> np.ndarray:
    pres = np.zeros((len(slices), log.ft), dtype=bool)
    for i, s in enumerate(slices):
        _, types = log.between(s.ow_start, s.ow_end)
        pres[i, types] = True
    return pres


def build_dataset(log: EventLog, spec: WindowSpec, refs_source: "ClassDataset | None" = None) -> ClassDataset:
    """Features ``basic || statistical || similarity`` and PW labels per slice.

    With ``refs_source=None`` the log is treated as training data: reference
    OWs are its own positive windows, excluding any that overlap the window
    being featurized. Otherwise the references of ``refs_source`` are used.
    """
    ft = log.ft
    slices = slice_windows(log, spec)
    n = len(slices)
    X = np.zeros((n, feature_length(spec, ft)))
    y = np.zeros(n)
    anchors = np.array([s.anchor_day for s in slices], dtype=np.int64)
    if n == 0:
        return ClassDataset(X, y, anchors, slices, np.zeros((0, ft), dtype=bool))

    # Basic features from a cumulative count table.
    counts = log.count_matrix()
    cum = np.vstack([np.zeros((1, ft), dtype=np.int64), np.cumsum(counts, axis=0)])
    starts = np.array([s.ow_start for s in slices])
    for j in range(spec.X):
        a = starts + j * spec.M
        X[:, j * ft:(j + 1) * ft] = cum[a + spec.M] - cum[a]

    off = spec.X * ft
    for i, s in enumerate(slices):
        X[i, off:off + N_STAT * ft] = statistical_features(s, log, ft)
        y[i] = label_window(s, log)

    presence = _presence(log, slices)
    if refs_source is None:
        pos = np.flatnonzero(y == 1)
        refs = presence[pos]
        ow_s = starts[pos]
        # Reference OWs overlapping the sample's own OW are excluded.
        exclude = np.abs(starts[:, None] - ow_s[None, :]) < spec.ow_len
        sim = _jaccard_summary(presence, refs, exclude)
    else:
        refs = refs_source.refs
        sim = _jaccard_summary(presence, refs)
    X[:, -2:] = sim
    return ClassDataset(X, y, anchors, slices, refs)
