"""Synthetic event-log generator with injected warning patterns.

Every non-target event type emits a Weibull renewal process of inter-arrival
days. Target events are scheduled by their own renewal process, and before
each target one instance of a warning pattern is injected. A pattern is a
sequence of ``pl`` families of interchangeable event types; an instance emits
one random member per family. A share ``1 - pc`` of the instances is
distorted (elements removed) and as many full decoy instances are placed
where no target follows.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .logmodel import EventLog

_GAMMA_1_5 = math.gamma(1.5)


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class WeibullParams:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError("Weibull shape and scale must be positive")

    @property
    def mean(self) -> float:
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)


@dataclass(frozen=True)
class GeneratorSpec:
    ft: int = 150
    s_tr: int = 1094
    s_te: int = 730
    pl: int = 6
    min_f: int = 1
    max_f: int = 3
    min_t: int = 1
    max_t: int = 5
    min_p: int = 1
    max_p: int = 2
    pc: float = 0.9
    pps: float = 0.5
    shuffle: bool = False
    target_count: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.min_t <= self.max_t:
            raise ValueError("need 0 <= min_t <= max_t")
        if not 0 < self.min_p <= self.max_p:
            raise ValueError("need 0 < min_p <= max_p")
        if not 1 <= self.min_f <= self.max_f:
            raise ValueError("need 1 <= min_f <= max_f")
        if self.pl < 1 or self.pl * self.max_f + 1 > self.ft:
            raise ValueError("pattern families plus target do not fit in ft event types")
        if not (0 <= self.pc <= 1 and 0 <= self.pps <= 1):
            raise ValueError("pc and pps must lie in [0, 1]")
        if self.target_count < 1 or self.s_tr < 0 or self.s_te < 0:
            raise ValueError("target_count must be positive and spans non-negative")

    @property
    def horizon(self) -> int:
        return self.s_tr + self.s_te

    @property
    def mean_target_gap(self) -> float:
        return self.horizon / self.target_count

    @property
    def min_target_gap(self) -> int:
        return self.max_t + self.pl * self.max_p + 1

    def replace(self, **changes) -> "GeneratorSpec":
        return dataclasses.replace(self, **changes)


_DS1 = GeneratorSpec()
PRESETS: dict[str, GeneratorSpec] = {
    "DS1": _DS1,
    "DS2": _DS1.replace(pl=4, min_f=3, max_f=4),
}
PRESETS["DS3"] = PRESETS["DS1"].replace(ft=1500)
PRESETS["DS4"] = PRESETS["DS2"].replace(ft=1500)
PRESETS["DS5"] = PRESETS["DS2"].replace(shuffle=True)
PRESETS["DS6"] = PRESETS["DS5"].replace(target_count=25)


def preset(name: str) -> GeneratorSpec:
    try:
        return PRESETS[name.upper()]
    except KeyError:
        raise KeyError(f"unknown dataset preset {name!r}; expected one of {sorted(PRESETS)}") from None


@dataclass
class PatternInstance:
    days: list[int]
    types: list[int]
    families: list[int]
    target_day: int | None
    partial: bool = False
    decoy: bool = False
    removed: list[int] = field(default_factory=list)


@dataclass
class PatternPlan:
    """Bookkeeping of families and injected instances (test-only metadata)."""

    families: list[list[int]]
    target_type: int
    instances: list[PatternInstance] = field(default_factory=list)
    skipped_decoys: int = 0

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "PatternPlan":
        raw = json.loads(text)
        instances = [PatternInstance(**inst) for inst in raw.pop("instances")]
        return cls(instances=instances, **raw)


def sample_weibull(params: WeibullParams, rng: np.random.Generator, size=None):
    """Inverse-CDF Weibull draw(s): ``scale * (-ln(1 - u)) ** (1 / shape)``."""
    u = rng.random(size)
    return params.scale * (-np.log1p(-u)) ** (1.0 / params.shape)


def _renewal_days(params: WeibullParams, horizon: int, rng: np.random.Generator) -> np.ndarray:
    """Integer event days of a stationary-ish renewal process on [0, horizon)."""
    if horizon <= 0:
        return np.empty(0, dtype=np.int64)
    # Random phase so that types do not all fire on day 0.
    t = rng.random() * sample_weibull(params, rng)
    chunks = [np.array([t])]
    n = int(horizon / params.mean * 1.5) + 8
    while t < horizon:
        gaps = sample_weibull(params, rng, n)
        times = t + np.cumsum(gaps)
        chunks.append(times)
        t = times[-1]
    times = np.concatenate(chunks)
    return np.floor(times[times < horizon]).astype(np.int64)


def _schedule_targets(spec: GeneratorSpec, rng: np.random.Generator) -> list[int]:
    params = WeibullParams(2.0, spec.mean_target_gap / _GAMMA_1_5)
    floor_gap = spec.min_target_gap
    targets = []
    t = 0
    while True:
        gap = max(floor_gap, int(sample_weibull(params, rng)))
        t += gap
        if t >= spec.horizon:
            break
        targets.append(t)
    return targets


def _draw_instance(spec: GeneratorSpec, families, last_day: int, rng) -> PatternInstance:
    order = list(range(spec.pl))
    if spec.shuffle:
        order = rng.permutation(spec.pl).tolist()
    days = [last_day]
    for _ in range(spec.pl - 1):
        days.append(days[-1] - int(rng.integers(spec.min_p, spec.max_p + 1)))
    days.reverse()
    types = [int(rng.choice(families[f])) for f in order]
    return PatternInstance(days=days, types=types, families=order, target_day=None)


def _fraction_count(fraction: float, total: int) -> float:
    # Guards against 1 - 0.9 == 0.0999... producing 4.999... instead of 5.
    return round(fraction * total, 9)


def generate(spec: GeneratorSpec, seed: int | None = None) -> tuple[EventLog, PatternPlan]:
    """Generate one log instance; deterministic in ``(spec, seed)``."""
    seed = spec.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    horizon = spec.horizon
    span = spec.max_t + (spec.pl - 1) * spec.max_p

    perm = rng.permutation(spec.ft)
    target_type = int(perm[0])
    sizes = rng.integers(spec.min_f, spec.max_f + 1, spec.pl)
    families = []
    pos = 1
    for size in sizes:
        families.append(sorted(int(x) for x in perm[pos:pos + size]))
        pos += int(size)
    family_types = set(perm[1:pos].tolist())

    if spec.min_target_gap >= horizon:
        raise GenerationError(f"horizon {horizon} cannot hold one pattern plus its target "
                              f"({spec.min_target_gap} days)")
    targets = _schedule_targets(spec, rng)
    if targets and targets[0] < span or any(b - a <= span for a, b in zip(targets, targets[1:])):
        raise GenerationError("pattern does not fit inside the shortest episode")

    days_parts: list[np.ndarray] = []
    type_parts: list[np.ndarray] = []

    for t in range(spec.ft):
        if t == target_type:
            continue
        shape = rng.uniform(0.8, 1.6)
        if t in family_types:
            mean = 4.0 * spec.mean_target_gap
        else:
            mean = rng.uniform(20.0, 120.0)
        params = WeibullParams(shape, mean / math.gamma(1.0 + 1.0 / shape))
        d = _renewal_days(params, horizon, rng)
        days_parts.append(d)
        type_parts.append(np.full(len(d), t, dtype=np.int64))

    days_parts.append(np.asarray(targets, dtype=np.int64))
    type_parts.append(np.full(len(targets), target_type, dtype=np.int64))

    plan = PatternPlan(families=families, target_type=target_type)
    for target in targets:
        last = target - int(rng.integers(spec.min_t, spec.max_t + 1))
        inst = _draw_instance(spec, families, last, rng)
        inst.target_day = target
        plan.instances.append(inst)

    n_partial = int(round(_fraction_count(1.0 - spec.pc, len(plan.instances))))
    n_remove = min(spec.pl, math.ceil(_fraction_count(spec.pps, spec.pl)))
    if n_partial and n_remove:
        for idx in rng.choice(len(plan.instances), n_partial, replace=False).tolist():
            inst = plan.instances[idx]
            gone = sorted(rng.choice(spec.pl, n_remove, replace=False).tolist())
            inst.partial = True
            inst.removed = gone
            keep = [i for i in range(spec.pl) if i not in gone]
            inst.days = [inst.days[i] for i in keep]
            inst.types = [inst.types[i] for i in keep]
            inst.families = [inst.families[i] for i in keep]

    n_decoys = math.floor(_fraction_count(1.0 - spec.pc, spec.target_count))
    # Free stretches: strictly after the previous target, ending before the real
    # instance of the next target (or the horizon) minus max_t days.
    bounds = [-1] + targets
    stretches = []
    for i, prev in enumerate(bounds):
        nxt = bounds[i + 1] if i + 1 < len(bounds) else None
        lo = prev + 1 + (spec.pl - 1) * spec.max_p
        hi = (nxt - span - 1 - spec.max_t - 1) if nxt is not None else horizon - 1
        if hi >= lo:
            stretches.append((lo, hi))
    for _ in range(n_decoys):
        if not stretches:
            plan.skipped_decoys += 1
            continue
        lo, hi = stretches.pop(int(rng.integers(len(stretches))))
        inst = _draw_instance(spec, families, int(rng.integers(lo, hi + 1)), rng)
        inst.decoy = True
        plan.instances.append(inst)

    for inst in plan.instances:
        days_parts.append(np.asarray(inst.days, dtype=np.int64))
        type_parts.append(np.asarray(inst.types, dtype=np.int64))

    days = np.concatenate(days_parts)
    types = np.concatenate(type_parts)
    order = np.lexsort((types, days))
    log = EventLog(days[order], types[order], horizon, spec.ft, target_type)
    return log, plan
