"""Event-log data model, CSV (de)serialization, splitting and episodes.

Day is the atomic time unit. A log stores its records column-wise (two
integer arrays sorted by day) and exposes them as ``EventRecord`` values on
demand.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

DEFAULT_EPOCH = dt.date(2020, 1, 1)


class LogParseError(ValueError):
    """Raised when CSV text cannot be parsed into an event log."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class EventRecord(NamedTuple):
    day: int
    event_type: int


class Episode(NamedTuple):
    start_day: int
    target_day: int

    @property
    def length(self) -> int:
        return self.target_day - self.start_day + 1


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.int64).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EventLog:
    """Immutable day-granularity event log with one designated target type."""

    days: np.ndarray
    types: np.ndarray
    horizon_days: int
    ft: int
    target_type: int = 0
    epoch: dt.date = field(default=DEFAULT_EPOCH)

    def __post_init__(self):
        days = np.asarray(self.days, dtype=np.int64).reshape(-1)
        types = np.asarray(self.types, dtype=np.int64).reshape(-1)
        if days.shape != types.shape:
            raise ValueError("days and types must have equal length")
        order = np.argsort(days, kind="stable")
        object.__setattr__(self, "days", _frozen(days[order]))
        object.__setattr__(self, "types", _frozen(types[order]))
        if not 0 <= self.target_type < max(self.ft, 1):
            raise ValueError(f"target_type {self.target_type} outside [0, {self.ft})")
        if len(days):
            if self.days[0] < 0 or self.days[-1] >= self.horizon_days:
                raise ValueError("record day outside [0, horizon)")
            if self.types.min() < 0 or self.types.max() >= self.ft:
                raise ValueError("event type outside [0, ft)")

    @classmethod
    def from_records(cls, records, horizon_days: int, ft: int, target_type: int = 0,
                     epoch: dt.date = DEFAULT_EPOCH) -> "EventLog":
        recs = list(records)
        days = [r[0] for r in recs]
        types = [r[1] for r in recs]
        return cls(np.array(days, dtype=np.int64), np.array(types, dtype=np.int64),
                   horizon_days, ft, target_type, epoch)

    def __len__(self) -> int:
        return len(self.days)

    def __iter__(self) -> Iterator[EventRecord]:
        return (EventRecord(int(d), int(t)) for d, t in zip(self.days, self.types))

    @property
    def records(self) -> list[EventRecord]:
        return list(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventLog):
            return NotImplemented
        return (self.horizon_days == other.horizon_days and self.ft == other.ft
                and self.target_type == other.target_type
                and np.array_equal(self.days, other.days)
                and np.array_equal(self.types, other.types))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (f"EventLog(n={len(self)}, horizon_days={self.horizon_days}, ft={self.ft}, "
                f"target_type={self.target_type})")

    def target_days(self) -> np.ndarray:
        """Distinct days carrying the target event, ascending."""
        return np.unique(self.days[self.types == self.target_type])

    def count_matrix(self) -> np.ndarray:
        """Dense (horizon x ft) matrix of per-day event counts."""
        counts = np.zeros((self.horizon_days, self.ft), dtype=np.int64)
        np.add.at(counts, (self.days, self.types), 1)
        return counts

    def between(self, start: int, end: int) -> tuple[np.ndarray, np.ndarray]:
        """Records with start <= day < end, as (days, types) array views."""
        lo, hi = np.searchsorted(self.days, [start, end], side="left")
        return self.days[lo:hi], self.types[lo:hi]

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(f"{self.horizon_days},{self.ft},{self.target_type};".encode())
        h.update(self.days.tobytes())
        h.update(self.types.tobytes())
        return h.hexdigest()[:16]


def _parse_header(line: str, lineno: int) -> dict:
    meta = {}
    for token in line.lstrip("#").split():
        if "=" not in token:
            raise LogParseError(lineno, f"bad header token {token!r}")
        key, value = token.split("=", 1)
        try:
            if key == "epoch":
                meta[key] = dt.date.fromisoformat(value)
            elif key in ("ft", "target", "horizon"):
                meta[key] = int(value)
            else:
                raise LogParseError(lineno, f"unknown header key {key!r}")
        except ValueError as exc:
            if isinstance(exc, LogParseError):
                raise
            raise LogParseError(lineno, f"bad header value for {key!r}") from None
    return meta


def ingest_csv(text: str, target_type: int | None = None) -> EventLog:
    """Parse ``date,event_id`` lines into an :class:`EventLog`.

    An optional first line ``# ft=<n> target=<id> epoch=<date> [horizon=<n>]``
    carries metadata. Without a declared epoch, day offsets are counted from
    the earliest date in the file.
    """
    meta: dict = {}
    dates: list[dt.date] = []
    ids: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if dates:
                raise LogParseError(lineno, "header must precede records")
            meta.update(_parse_header(line, lineno))
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise LogParseError(lineno, f"expected 'date,event_id', got {raw!r}")
        try:
            date = dt.date.fromisoformat(parts[0].strip())
        except ValueError:
            raise LogParseError(lineno, f"bad ISO date {parts[0]!r}") from None
        try:
            event_id = int(parts[1].strip())
        except ValueError:
            raise LogParseError(lineno, f"non-integer event id {parts[1]!r}") from None
        if event_id < 0:
            raise LogParseError(lineno, f"negative event id {event_id}")
        dates.append(date)
        ids.append(event_id)

    epoch = meta.get("epoch", min(dates) if dates else DEFAULT_EPOCH)
    days = np.array([(d - epoch).days for d in dates], dtype=np.int64)
    if len(days) and days.min() < 0:
        raise LogParseError(1, "record dated before the declared epoch")
    target = meta.get("target", 0 if target_type is None else target_type)
    ft = meta.get("ft", max(ids) + 1 if ids else 0)
    ft = max(ft, target + 1)
    horizon = meta.get("horizon", int(days.max()) + 1 if len(days) else 0)
    return EventLog(days, np.array(ids, dtype=np.int64), horizon, ft, target, epoch)


def write_csv(log: EventLog, epoch: dt.date | None = None, header: bool = False) -> str:
    """Render ``log`` as CSV text, one ``date,event_id`` line per record.

    With ``header=True`` a metadata line is prepended so that
    ``ingest_csv(write_csv(log, header=True)) == log`` holds for any log.
    """
    epoch = log.epoch if epoch is None else epoch
    lines = []
    if header:
        lines.append(f"# ft={log.ft} target={log.target_type} epoch={epoch.isoformat()} "
                     f"horizon={log.horizon_days}")
    ordinal = epoch.toordinal()
    cache: dict[int, str] = {}
    for d, t in zip(log.days.tolist(), log.types.tolist()):
        s = cache.get(d)
        if s is None:
            s = cache[d] = dt.date.fromordinal(ordinal + d).isoformat()
        lines.append(f"{s},{t}")
    return "\n".join(lines)


def split_train_test(log: EventLog, s_tr: int, s_te: int) -> tuple[EventLog, EventLog]:
    """Cut ``log`` into a training prefix and a re-based test segment."""
    if s_tr < 0 or s_te < 0 or s_tr + s_te > log.horizon_days:
        raise IndexError(f"split {s_tr}+{s_te} exceeds horizon {log.horizon_days}")
    d_tr, t_tr = log.between(0, s_tr)
    d_te, t_te = log.between(s_tr, s_tr + s_te)
    train = EventLog(d_tr, t_tr, s_tr, log.ft, log.target_type, log.epoch)
    test = EventLog(d_te - s_tr, t_te, s_te, log.ft, log.target_type,
                    log.epoch + dt.timedelta(days=s_tr))
    return train, test


def split_episodes(log: EventLog) -> list[Episode]:
    """One episode per target day; the tail after the last target is dropped."""
    episodes = []
    start = 0
    for target in log.target_days().tolist():
        episodes.append(Episode(start, target))
        start = target + 1
    return episodes
