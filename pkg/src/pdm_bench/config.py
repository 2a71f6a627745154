"""Declarative experiment configuration read from an INI file.

Example::

    [experiment]
    datasets = DS1
    seeds = 0-9
    settings = A, B, C, D
    pipeline = class
    mode = replication
    algorithms = gbt, rf, knn
    reductions = relieff

    [resampling]
    mode = none

    [ensembles]
    strategies = simple, dynamic_threshold
    members = gbt:relieff, rf:relieff, knn:relieff

    [knn]
    k = 1, 2, 3, 4, 5

Any parameter in an algorithm section given as a comma list is swept; the
best value is selected per cell and seed.
"""
from __future__ import annotations

import ast
import configparser
import itertools
from dataclasses import dataclass, field
from typing import Any

from .classification import SETTINGS
from .ensembles import KINDS
from .generator import PRESETS
from .predictors import ALGORITHMS, DEFAULTS
from .reduction import METHODS
from .regression import ALARM_GRID
from .resampling import ResamplePlan

PIPELINES = ("class", "reg")
MODES = ("replication", "honest")
BASELINES = ("random", "all_true")
MODELS = tuple(a for a in ALGORITHMS if a not in BASELINES)


class ConfigError(ValueError):
    pass


def _as_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def parse_seeds(value: str) -> tuple[int, ...]:
    """``"0-9"`` or ``"1, 4, 7"`` or a mix such as ``"0-2, 5"``."""
    out: list[int] = []
    for part in _as_list(value):
        if "-" in part[1:]:
            a, b = part.split("-", 1) if not part.startswith("-") else (part, part)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _literal(text: str) -> Any:
    text = text.strip()
    if text.lower() in ("none", "null"):
        return None
    if text.lower() in ("true", "yes"):
        return True
    if text.lower() in ("false", "no"):
        return False
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _param_value(text: str) -> Any:
    # Tuples written with parentheses (mlp hidden sizes) stay one value.
    text = text.strip()
    if text.startswith("(") or text.startswith("["):
        value = _literal(text)
        return tuple(value) if isinstance(value, list) else value
    parts = _as_list(text)
    if len(parts) > 1:
        return [_literal(p) for p in parts]
    return _literal(text)


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[str, ...] = ("DS1",)
    seeds: tuple[int, ...] = tuple(range(10))
    settings: tuple[str, ...] = ("A", "B", "C", "D")
    pipeline: str = "class"
    mode: str = "replication"
    algorithms: tuple[str, ...] = ("gbt",)
    reductions: tuple[str, ...] = ("relieff",)
    params: dict = field(default_factory=dict)  # algorithm -> {name: value or [values]}
    resample: ResamplePlan = ResamplePlan()
    ensembles: tuple[str, ...] = ()
    members: tuple[tuple[str, str], ...] = (("gbt", "relieff"), ("rf", "relieff"), ("knn", "relieff"))
    baselines: bool = True
    val_fraction: float = 0.2
    relieff_k: int = 10
    relieff_samples: int | None = None
    steepness: float = 0.7
    midpoints: dict = field(default_factory=lambda: {"A": 16.0, "B": 6.0, "C": 16.0, "D": 6.0})
    alarm_thresholds: tuple[float, ...] = ALARM_GRID
    rare_min_ratio: float = 0.5
    frequent_max_day_fraction: float = 0.3
    output: str | None = None

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seed list must not be empty")
        for name in self.datasets:
            if name.upper() not in PRESETS:
                raise ConfigError(f"unknown dataset preset {name!r}")
        for s in self.settings:
            if s.upper() not in SETTINGS:
                raise ConfigError(f"unknown setting {s!r}")
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"pipeline must be one of {PIPELINES}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        for a in self.algorithms:
            if a not in MODELS:
                raise ConfigError(f"unknown algorithm {a!r}")
        for r in self.reductions:
            if r not in METHODS:
                raise ConfigError(f"unknown reduction {r!r}")
        for k in self.ensembles:
            if k not in KINDS:
                raise ConfigError(f"unknown ensemble strategy {k!r}")
        if self.ensembles and len(self.members) != 3:
            raise ConfigError("ensembles need exactly three members")
        for a, r in self.members:
            if a not in MODELS or r not in METHODS:
                raise ConfigError(f"bad ensemble member {a}:{r}")
        for a, p in self.params.items():
            if a not in DEFAULTS:
                raise ConfigError(f"parameters given for unknown algorithm {a!r}")
            bad = set(p) - set(DEFAULTS[a])
            if bad:
                raise ConfigError(f"unknown {a} parameters {sorted(bad)}")
        if not 0 < self.val_fraction < 1:
            raise ConfigError("val_fraction must lie in (0, 1)")
        if not self.alarm_thresholds or not all(0 < t < 1 for t in self.alarm_thresholds):
            raise ConfigError("alarm thresholds must lie in (0, 1)")
        object.__setattr__(self, "datasets", tuple(d.upper() for d in self.datasets))
        object.__setattr__(self, "settings", tuple(s.upper() for s in self.settings))

    def param_grid(self, algorithm: str) -> list[dict]:
        """Cartesian product of list-valued parameters (one dict per candidate)."""
        base = {"knn": {"k": [1, 2, 3, 4, 5]}}.get(algorithm, {})
        given = {**base, **self.params.get(algorithm, {})}
        keys = sorted(given)
        values = [v if isinstance(v, list) else [v] for v in (given[k] for k in keys)]
        return [dict(zip(keys, combo)) for combo in itertools.product(*values)]

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        cp.read_string(text)
        kw: dict[str, Any] = {}
        if cp.has_section("experiment"):
            e = cp["experiment"]
            for key in ("datasets", "settings", "algorithms", "reductions"):
                if key in e:
                    kw[key] = tuple(_as_list(e[key]))
            if "seeds" in e:
                kw["seeds"] = parse_seeds(e["seeds"])
            for key in ("pipeline", "mode", "output"):
                if key in e:
                    kw[key] = e[key].strip()
            if "baselines" in e:
                kw["baselines"] = e.getboolean("baselines")
            if "val_fraction" in e:
                kw["val_fraction"] = e.getfloat("val_fraction")
        if cp.has_section("resampling"):
            r = cp["resampling"]
            kw["resample"] = ResamplePlan(r.get("mode", "none").strip(), r.getint("inflate_factor", 1),
                                          r.getint("seed", 0))
        if cp.has_section("ensembles"):
            s = cp["ensembles"]
            kw["ensembles"] = tuple(_as_list(s.get("strategies", "")))
            if "members" in s:
                kw["members"] = tuple(tuple(m.split(":", 1)) for m in _as_list(s["members"]))
        if cp.has_section("reduction"):
            r = cp["reduction"]
            kw["relieff_k"] = r.getint("k_neighbors", 10)
            samples = r.get("sample_count", "all").strip()
            kw["relieff_samples"] = None if samples == "all" else int(samples)
        if cp.has_section("regression"):
            g = cp["regression"]
            kw["steepness"] = g.getfloat("steepness", 0.7)
            if "midpoints" in g:
                kw["midpoints"] = {k.strip().upper(): float(v) for k, v in
                                   (m.split(":", 1) for m in _as_list(g["midpoints"]))}
            if "alarm_thresholds" in g:
                kw["alarm_thresholds"] = tuple(float(t) for t in _as_list(g["alarm_thresholds"]))
            kw["rare_min_ratio"] = g.getfloat("rare_min_ratio", 0.5)
            kw["frequent_max_day_fraction"] = g.getfloat("frequent_max_day_fraction", 0.3)
        params = {}
        for a in ALGORITHMS:
            if cp.has_section(a):
                params[a] = {k: _param_value(v) for k, v in cp[a].items()}
        kw["params"] = params
        return cls(**kw)

    def to_ini(self) -> str:
        """Normalized INI text; ``from_ini(to_ini())`` reproduces the config."""
        def fmt(v):
            if isinstance(v, list):
                return ", ".join(fmt(x) for x in v)
            if isinstance(v, tuple):
                return repr(v)
            return str(v)

        lines = ["[experiment]",
                 f"datasets = {', '.join(self.datasets)}",
                 f"seeds = {', '.join(map(str, self.seeds))}",
                 f"settings = {', '.join(self.settings)}",
                 f"pipeline = {self.pipeline}",
                 f"mode = {self.mode}",
                 f"algorithms = {', '.join(self.algorithms)}",
                 f"reductions = {', '.join(self.reductions)}",
                 f"baselines = {'yes' if self.baselines else 'no'}",
                 f"val_fraction = {self.val_fraction!r}"]
        if self.output:
            lines.append(f"output = {self.output}")
        lines += ["", "[resampling]", f"mode = {self.resample.mode}",
                  f"inflate_factor = {self.resample.inflate_factor}", f"seed = {self.resample.seed}",
                  "", "[ensembles]", f"strategies = {', '.join(self.ensembles)}",
                  f"members = {', '.join(f'{a}:{r}' for a, r in self.members)}",
                  "", "[reduction]", f"k_neighbors = {self.relieff_k}",
                  f"sample_count = {'all' if self.relieff_samples is None else self.relieff_samples}",
                  "", "[regression]", f"steepness = {self.steepness!r}",
                  f"midpoints = {', '.join(f'{k}:{v!r}' for k, v in sorted(self.midpoints.items()))}",
                  f"alarm_thresholds = {', '.join(repr(t) for t in self.alarm_thresholds)}",
                  f"rare_min_ratio = {self.rare_min_ratio!r}",
                  f"frequent_max_day_fraction = {self.frequent_max_day_fraction!r}"]
        for a in sorted(self.params):
            lines += ["", f"[{a}]"] + [f"{k} = {fmt(v)}" for k, v in sorted(self.params[a].items())]
        return "\n".join(lines) + "\n"
