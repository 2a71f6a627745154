"""Episode-based scoring of alarm traces.

Each episode ``[start, target]`` is split into an early period, a correct
period of ``correct_len`` days and a repair period of ``repair_len`` days
ending on the target day. An episode scores one TP if any alarm lands in its
correct period (else one FN); early alarms are FPs and early non-alarms TNs;
repair alarms are only tallied as ignored.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .logmodel import Episode


class DayRange(NamedTuple):
    """Half-open day interval ``[start, end)``."""

    start: int
    end: int

    def __contains__(self, day) -> bool:  # type: ignore[override]
        return self.start <= day < self.end

    def __len__(self) -> int:
        return max(0, self.end - self.start)


@dataclass(frozen=True)
class PeriodSpec:
    correct_len: int
    repair_len: int = 0

    def __post_init__(self):
        if self.correct_len < 1 or self.repair_len < 0:
            raise ValueError("need correct_len >= 1 and repair_len >= 0")

    @classmethod
    def for_window(cls, window) -> "PeriodSpec":
        return cls(correct_len=window.Y, repair_len=window.Z)


class Segments(NamedTuple):
    early: DayRange
    correct: DayRange
    repair: DayRange
    skipped: bool


def segment(episode: Episode, spec: PeriodSpec) -> Segments:
    """Split an episode into early/correct/repair day ranges.

    With ``repair_len > 0`` the repair range is ``[target - repair_len,
    target]``. With ``repair_len == 0`` it is empty and the target day closes
    the correct range instead, so the three ranges always cover the episode.
    """
    start, target = episode
    if spec.repair_len > 0:
        repair = DayRange(target - spec.repair_len, target + 1)
        correct = DayRange(repair.start - spec.correct_len, repair.start)
    else:
        repair = DayRange(target + 1, target + 1)
        correct = DayRange(target - spec.correct_len, target + 1)
    skipped = correct.start < start
    early = DayRange(start, max(start, correct.start))
    return Segments(early, correct, repair, skipped)


@dataclass(frozen=True)
class PredictionTrace:
    anchors: np.ndarray
    alarms: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.anchors, dtype=np.int64).reshape(-1)
        b = np.asarray(self.alarms).astype(np.int8).reshape(-1)
        if a.shape != b.shape:
            raise ValueError("anchors and alarms must have equal length")
        if len(a) > 1 and np.any(np.diff(a) <= 0):
            raise ValueError("anchor days must be strictly increasing")
        object.__setattr__(self, "anchors", a)
        object.__setattr__(self, "alarms", b)

    def __len__(self) -> int:
        return len(self.anchors)


def f1_from(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class EvalOutcome:
    tp: int = 0
    fn: int = 0
    fp: int = 0
    tn: int = 0
    ignored: int = 0
    skipped: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        return f1_from(self.precision, self.recall)

    def __add__(self, other: "EvalOutcome") -> "EvalOutcome":
        return EvalOutcome(*(a + b for a, b in zip(astuple_counts(self), astuple_counts(other))))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(precision=self.precision, recall=self.recall, f1=self.f1)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def astuple_counts(o: EvalOutcome) -> tuple[int, ...]:
    return (o.tp, o.fn, o.fp, o.tn, o.ignored, o.skipped)


def f1(outcome: EvalOutcome) -> float:
    return outcome.f1


def score(trace: PredictionTrace, episodes: Sequence[Episode], spec: PeriodSpec) -> EvalOutcome:
    """Tally TP/FN/FP/TN/ignored over all evaluable episodes."""
    anchors = trace.anchors
    alarms = trace.alarms.astype(bool)
    tp = fn = fp = tn = ignored = skipped = 0
    for ep in episodes:
        early, correct, repair, skip = segment(ep, spec)
        if skip:
            skipped += 1
            continue
        lo, hi = np.searchsorted(anchors, [correct.start, correct.end])
        if alarms[lo:hi].any():
            tp += 1
        else:
            fn += 1
        lo, hi = np.searchsorted(anchors, [early.start, early.end])
        n_alarm = int(alarms[lo:hi].sum())
        fp += n_alarm
        tn += int(hi - lo) - n_alarm
        lo, hi = np.searchsorted(anchors, [repair.start, repair.end])
        ignored += int(alarms[lo:hi].sum())
    return EvalOutcome(tp, fn, fp, tn, ignored, skipped)


@dataclass(frozen=True)
class EvalContext:
    """Everything needed to score alarm vectors over fixed anchors."""

    anchors: np.ndarray
    episodes: tuple[Episode, ...]
    periods: PeriodSpec

    def outcome(self, alarms) -> EvalOutcome:
        return score(PredictionTrace(self.anchors, alarms), self.episodes, self.periods)

    def f1(self, alarms) -> float:
        return self.outcome(alarms).f1


def baseline_trace(kind: str, anchors, seed: int = 0) -> PredictionTrace:
    """Dummy predictors: ``all_true`` alarms everywhere, ``random`` flips a fair coin."""
    anchors = np.asarray(anchors, dtype=np.int64)
    if kind == "all_true":
        alarms = np.ones(len(anchors), dtype=np.int8)
    elif kind == "random":
        alarms = np.random.default_rng(seed).integers(0, 2, len(anchors)).astype(np.int8)
    else:
        raise ValueError(f"unknown baseline {kind!r}")
    return PredictionTrace(anchors, alarms)
