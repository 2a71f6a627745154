"""Command-line entry point ``pdm-bench``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .classification import build_dataset, settings_preset
from .config import ExperimentConfig
from .generator import generate, preset
from .logmodel import ingest_csv, write_csv
from .regression import (CURVES, RegressionConfig, build_regression_dataset, select_types)
from .results import ResultsTable, atomic_write, report


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    atomic_write(path, text)


def cmd_generate(args) -> int:
    spec = preset(args.preset)
    log, plan = generate(spec, seed=args.seed)
    _write(args.out, write_csv(log, header=not args.no_header) + "\n")
    if args.plan:
        _write(args.plan, plan.to_json() + "\n")
    return 0


def _num(v: float) -> str:
    return format(float(v), ".17g")


def cmd_featurize(args) -> int:
    with open(args.inp, encoding="utf-8") as fh:
        log = ingest_csv(fh.read(), target_type=args.target)
    window = settings_preset(args.setting)
    if args.mode == "class":
        ds = build_dataset(log, window)
        X, y, anchors = ds.X, ds.y, ds.anchors
    else:
        rc = RegressionConfig.for_window(window)
        ds = build_regression_dataset(log, rc, CURVES[args.setting.upper()], select_types(log, rc))
        X, y, anchors = ds.X, ds.y, ds.anchors
    lines = [",".join(["anchor_day", "label"] + [f"f{i}" for i in range(X.shape[1])])]
    for a, lab, row in zip(anchors.tolist(), y.tolist(), X):
        lab_s = str(int(lab)) if args.mode == "class" else _num(lab)
        lines.append(",".join([str(a), lab_s] + [_num(v) for v in row]))
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_run(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        cfg = ExperimentConfig.from_ini(fh.read())
    if args.output:
        from dataclasses import replace

        cfg = replace(cfg, output=args.output)

    def progress(done, total, job):
        logging.getLogger("pdm_bench").info("job %d/%d done: %s", done, total, job)

    from .runner import run_experiment

    table = run_experiment(cfg, workers=args.workers, progress=progress)
    sys.stdout.write(report(table, "markdown"))
    failed = table.failed_keys()
    for key in failed:
        sys.stderr.write(f"failed cell: {'/'.join(key)}\n")
    return 1 if failed else 0


def cmd_report(args) -> int:
    path = args.results
    if os.path.isdir(path):
        path = os.path.join(path, "results.csv")
    with open(path, encoding="utf-8") as fh:
        table = ResultsTable.from_csv(fh.read())
    _write(args.out, report(table, args.format, args.stat))
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run

    ok = True
    for name, passed, info in run():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  ({info})" if info else ""))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pdm-bench", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate one synthetic event log")
    g.add_argument("--preset", default="DS1")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="-")
    g.add_argument("--plan", help="also write the injected-pattern plan as JSON")
    g.add_argument("--no-header", action="store_true", help="omit the metadata line")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("featurize", help="turn a log CSV into a sample CSV")
    f.add_argument("--mode", choices=("class", "reg"), default="class")
    f.add_argument("--setting", default="A")
    f.add_argument("--in", dest="inp", required=True)
    f.add_argument("--out", default="-")
    f.add_argument("--target", type=int, default=None, help="target id if the log has no header")
    f.set_defaults(func=cmd_featurize)

    r = sub.add_parser("run", help="run an experiment from an INI config")
    r.add_argument("--config", required=True)
    r.add_argument("--output", help="override the output directory")
    r.add_argument("--workers", type=int, default=None, help="default: $PDM_BENCH_WORKERS or 1")
    r.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="render a results CSV")
    p.add_argument("--results", required=True, help="results.csv or its directory")
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--stat", choices=("mean", "min"), default="mean")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_report)

    s = sub.add_parser("selftest", help="run the oracle cross-checks")
    s.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.seterr(over="ignore")
    try:
        return args.func(args)
    except BrokenPipeError:
        sys.stderr.close()
        return 0


if __name__ == "__main__":
    sys.exit(main())
