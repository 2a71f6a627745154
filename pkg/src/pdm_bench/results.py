"""Per-cell result aggregation, persistence and report tables."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

BASELINE_ALGOS = ("random", "all_true")
CSV_FIELDS = ("dataset", "setting", "algorithm", "reduction", "resample", "ensemble", "seed", "f1")


class CellKey(NamedTuple):
    dataset: str
    setting: str
    algorithm: str
    reduction: str = "none"
    resample: str = "none"
    ensemble: str = "none"

    @property
    def is_baseline(self) -> bool:
        return self.algorithm in BASELINE_ALGOS

    @property
    def row(self) -> tuple[str, str, str, str]:
        return (self.algorithm, self.reduction, self.resample, self.ensemble)

    def slug(self) -> str:
        return "__".join(p.replace("+", "-").replace(":", "-").replace("/", "-") for p in self)


@dataclass
class Cell:
    seeds: tuple[int, ...]
    per_seed: tuple[float, ...]
    details: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if len(self.seeds) != len(self.per_seed):
            raise ValueError("one F1 value per seed required")

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_seed)) if self.per_seed else math.nan

    @property
    def min(self) -> float:
        return float(np.min(self.per_seed)) if self.per_seed else math.nan

    @property
    def failed(self) -> bool:
        return any(math.isnan(v) for v in self.per_seed)

    def to_json(self, key: CellKey, meta: dict) -> str:
        body = {"key": key._asdict(), "seeds": list(self.seeds), "f1": list(self.per_seed),
                "mean": self.mean, "min": self.min, "details": self.details, **meta}
        return json.dumps(body, sort_keys=True, indent=1, allow_nan=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _same(a: tuple, b: tuple) -> bool:
    return len(a) == len(b) and all(x == y or (math.isnan(x) and math.isnan(y)) for x, y in zip(a, b))


@dataclass
class ResultsTable:
    cells: dict[CellKey, Cell] = field(default_factory=dict)
    pipeline: str = "class"
    mode: str = "replication"

    def __eq__(self, other) -> bool:
        if not isinstance(other, ResultsTable) or set(self.cells) != set(other.cells):
            return False
        return all(self.cells[k].seeds == other.cells[k].seeds
                   and _same(self.cells[k].per_seed, other.cells[k].per_seed) for k in self.cells)

    def __getitem__(self, key) -> Cell:
        return self.cells[CellKey(*key)]

    def get(self, dataset, setting, algorithm, reduction="none", resample="none", ensemble="none"):
        return self.cells.get(CellKey(dataset, setting, algorithm, reduction, resample, ensemble))

    def datasets(self) -> list[str]:
        return sorted({k.dataset for k in self.cells})

    def failed_keys(self) -> list[CellKey]:
        return [k for k, c in self.cells.items() if c.failed]

    # CSV ---------------------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for key in sorted(self.cells):
            cell = self.cells[key]
            for s, v in zip(cell.seeds, cell.per_seed):
                w.writerow([*key, s, repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, pipeline: str = "class", mode: str = "replication") -> "ResultsTable":
        rows: dict[CellKey, tuple[list, list]] = {}
        for rec in csv.DictReader(io.StringIO(text)):
            key = CellKey(*(rec[f] for f in CSV_FIELDS[:6]))
            seeds, vals = rows.setdefault(key, ([], []))
            seeds.append(int(rec["seed"]))
            vals.append(float(rec["f1"]))
        return cls({k: Cell(tuple(s), tuple(v)) for k, (s, v) in rows.items()}, pipeline, mode)


def _fmt(v: float) -> str:
    return "n/a" if v is None or math.isnan(v) else f"{v:.3f}"


def report(table: ResultsTable, format: str = "markdown", stat: str = "mean") -> str:
    """Render ``table`` as markdown (one table per dataset) or long-form CSV."""
    if format == "csv":
        return table.to_csv()
    if format != "markdown":
        raise ValueError(f"unknown report format {format!r}")
    settings = sorted({k.setting for k in table.cells}) or ["A", "B", "C", "D"]
    header = "| algorithm | reduction | resample | ensemble | " + " | ".join(settings) + " |"
    rule = "|" + "---|" * (4 + len(settings))
    oracle = " (dynamic ensemble rows are fit on the test instance)" if any(
        k.ensemble.startswith("dynamic") for k in table.cells) else ""
    out = [f"<!-- pipeline={table.pipeline} mode={table.mode} stat={stat}{oracle} -->"]
    if not table.cells:
        return "\n".join(out + [header, rule]) + "\n"
    for ds in table.datasets():
        keys = [k for k in table.cells if k.dataset == ds]
        rows = sorted({k.row for k in keys if not k.is_baseline})
        rows += [(b, "none", "none", "none") for b in BASELINE_ALGOS]
        out += ["", f"### {ds} ({stat} F1)", "", header, rule]
        for row in rows:
            vals = []
            for s in settings:
                cell = table.cells.get(CellKey(ds, s, *row))
                vals.append(_fmt(getattr(cell, stat) if cell else None))
            out.append("| " + " | ".join(row) + " | " + " | ".join(vals) + " |")
    return "\n".join(out) + "\n"


def atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def persist(table: ResultsTable, out_dir: str, meta: dict | None = None) -> list[str]:
    """Write one JSON per cell, ``results.csv`` and ``report.md``; returns the paths."""
    meta = {"pipeline": table.pipeline, "mode": table.mode, **(meta or {})}
    cell_dir = os.path.join(out_dir, "cells")
    os.makedirs(cell_dir, exist_ok=True)
    paths = []
    for key in sorted(table.cells):
        p = os.path.join(cell_dir, key.slug() + ".json")
        atomic_write(p, table.cells[key].to_json(key, meta))
        paths.append(p)
    for name, text in (("results.csv", table.to_csv()),
                       ("report.md", report(table, "markdown", "mean") + "\n"
                        + report(table, "markdown", "min"))):
        p = os.path.join(out_dir, name)
        atomic_write(p, text)
        paths.append(p)
    return paths
