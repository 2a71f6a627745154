"""Experiment orchestration over datasets x seeds x settings.

One job covers a (dataset, seed, setting) triple: it generates the log,
builds the pipeline matrices once and evaluates every predictor/reduction
pair, the ensembles and the baselines on them. ReliefF weights and PCA fits
are cached inside the job and shared by all predictors.

In ``replication`` mode every tuning choice (kept fraction, sweep values,
alarm threshold) is selected on the test split and the selected model's test
F1 is reported. In ``honest`` mode selection uses the last ``val_fraction``
of the training days, after which the chosen configuration is refitted on
the whole training split and scored once on the test split.
"""
from __future__ import annotations

import functools
import logging
import math
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import predictors as P
from .classification import build_dataset, settings_preset
from .config import ExperimentConfig
from .ensembles import (best_dynamic_threshold, f1_weights, fit_dynamic_weights, mean_risk,
                        simple_majority, weighted_vote)
from .evaluation import EvalContext, PeriodSpec, baseline_trace
from .generator import generate, preset
from .logmodel import EventLog, split_episodes, split_train_test
from .reduction import (ReliefFConfig, Reducer, kept_count, pca_fit, relieff_ranking,
                        relieff_weights, search_reduction)
from .regression import RegressionConfig, RiskCurveSpec, build_regression_dataset, select_types
from .resampling import resample_indices
from .results import BASELINE_ALGOS, Cell, CellKey, ResultsTable, atomic_write, persist

logger = logging.getLogger(__name__)

LABEL_CUT = 0.5  # class boundary for regression risk (ReliefF, resampling)


@functools.lru_cache(maxsize=4)
def instance(dataset: str, seed: int) -> EventLog:
    log, _ = generate(preset(dataset), seed=seed)
    return log


@dataclass
class View:
    """Fit matrix, evaluation matrix and the episode context to score it."""

    Xtr: np.ndarray
    ytr: np.ndarray
    Xev: np.ndarray
    ctx: EvalContext
    provenance: dict

    @property
    def labels(self) -> np.ndarray:
        return (self.ytr >= LABEL_CUT).astype(float)


def _build_view(cfg: ExperimentConfig, train: EventLog, ev: EventLog, setting: str) -> View:
    window = settings_preset(setting)
    if cfg.pipeline == "class":
        dtr = build_dataset(train, window)
        dev = build_dataset(ev, window, refs_source=dtr)
    else:
        rc = RegressionConfig.for_window(window, rare_min_ratio=cfg.rare_min_ratio,
                                         frequent_max_day_fraction=cfg.frequent_max_day_fraction)
        curve = RiskCurveSpec(cfg.midpoints[setting], cfg.steepness)
        kept = select_types(train, rc)
        dtr = build_regression_dataset(train, rc, curve, kept, drop_tail=True)
        dev = build_regression_dataset(ev, rc, curve, kept, drop_tail=False)
    ctx = EvalContext(dev.anchors, tuple(split_episodes(ev)), PeriodSpec.for_window(window))
    return View(dtr.X, dtr.y, dev.X, ctx, {"fit": train.content_hash(), "eval": ev.content_hash()})


@dataclass
class MemberRun:
    """Outcome of one predictor/reduction pair on one job."""

    sel_scores: np.ndarray
    sel_f1: float
    test_scores: np.ndarray
    threshold: float
    f1: float
    detail: dict = field(default_factory=dict)

    @property
    def test_alarms(self) -> np.ndarray:
        return (self.test_scores >= self.threshold).astype(np.int8)


class Job:
    def __init__(self, cfg: ExperimentConfig, dataset: str, seed: int, setting: str):
        self.cfg = cfg
        self.dataset = dataset
        self.seed = seed
        self.setting = setting
        self.task = "classification" if cfg.pipeline == "class" else "regression"
        log = instance(dataset, seed)
        g = preset(dataset)
        train, test = split_train_test(log, g.s_tr, g.s_te)
        self.final = _build_view(cfg, train, test, setting)
        if cfg.mode == "honest":
            s_val = max(1, int(round(cfg.val_fraction * g.s_tr)))
            fit_log, val_log = split_train_test(train, g.s_tr - s_val, s_val)
            self.sel = _build_view(cfg, fit_log, val_log, setting)
        else:
            self.sel = self.final
        self._reducer_cache: dict = {}

    # scoring ----------------------------------------------------------
    def _scorer(self, ctx: EvalContext):
        if self.task == "classification":
            return lambda s: ctx.f1(s >= 0.5)
        return lambda s: self._best_threshold(ctx, s)[1]

    def _best_threshold(self, ctx: EvalContext, scores) -> tuple[float, float]:
        """Alarm threshold with the best F1; ties go to the higher threshold."""
        best_t, best = None, -1.0
        for t in sorted(self.cfg.alarm_thresholds, reverse=True):
            f = ctx.f1(scores >= t)
            if f > best:
                best_t, best = t, f
        return best_t, best

    def _fit_view(self, view: View):
        """Resampled fit rows of ``view``."""
        plan = replace(self.cfg.resample, seed=self.cfg.resample.seed + self.seed)
        idx = resample_indices(view.ytr, plan, LABEL_CUT)
        return view.Xtr[idx], view.ytr[idx]

    def _reduction_state(self, view: View, method: str):
        key = (id(view), method)
        if key not in self._reducer_cache:
            if method == "relieff":
                rcfg = ReliefFConfig(self.cfg.relieff_k, self.cfg.relieff_samples, self.seed)
                self._reducer_cache[key] = relieff_weights(view.Xtr, view.labels, rcfg)
            else:
                self._reducer_cache[key] = pca_fit(view.Xtr)
        return self._reducer_cache[key]

    # one predictor/reduction pair ---------------------------------------
    def run_member(self, algorithm: str, reduction: str) -> MemberRun:
        view = self.sel
        Xfit, yfit = self._fit_view(view)
        scorer = self._scorer(view.ctx)
        best = None
        for params in self.cfg.param_grid(algorithm):
            pcfg = P.PredictorConfig(algorithm, self.task, params, self.seed)
            if reduction == "none":
                model = P.fit(pcfg, Xfit, yfit)
                pred = P.predict(model, view.Xev)
                cand = (scorer(pred), 1.0, view.Xtr.shape[1], pcfg, pred)
            else:
                state = self._reduction_state(view, reduction)
                res = search_reduction(
                    (Xfit, yfit), (view.Xev, None), pcfg, reduction, scorer,
                    weights=state if reduction == "relieff" else None,
                    projection=state if reduction == "pca" else None)
                cand = (res.score, res.choice.kept_fraction, res.reducer.width, pcfg, res.predictions)
            if best is None or cand[0] > best[0]:
                best = cand
        sel_f1, fraction, kept, pcfg, sel_scores = best
        if self.task == "classification":
            threshold = 0.5
        else:
            threshold, _ = self._best_threshold(view.ctx, sel_scores)
        detail = {"params": {k: _plain(v) for k, v in pcfg.params.items()},
                  "kept_fraction": fraction, "kept": kept, "threshold": threshold,
                  "selection_f1": sel_f1, "provenance": dict(view.provenance)}

        if self.final is view:
            test_scores = sel_scores
        else:
            test_scores = self._refit(pcfg, reduction, fraction)
            detail["provenance"]["test"] = self.final.provenance["eval"]
        alarms = test_scores >= threshold
        outcome = self.final.ctx.outcome(alarms)
        detail["outcome"] = outcome.to_dict()
        return MemberRun(sel_scores, sel_f1, test_scores, threshold, outcome.f1, detail)

    def _refit(self, pcfg, reduction: str, fraction: float) -> np.ndarray:
        view = self.final
        Xfit, yfit = self._fit_view(view)
        d = view.Xtr.shape[1]
        if reduction == "none":
            reducer = Reducer("none", d)
        elif reduction == "relieff":
            ranking = relieff_ranking(self._reduction_state(view, "relieff"))
            reducer = Reducer("relieff", d, columns=np.sort(ranking[:kept_count(d, fraction)]))
        else:
            proj = self._reduction_state(view, "pca")
            reducer = Reducer("pca", d, projection=proj.with_kept(
                min(kept_count(d, fraction), proj.basis.shape[0])))
        model = P.fit(pcfg, reducer.transform(Xfit), yfit)
        return P.predict(model, reducer.transform(view.Xev))

    # ensembles and baselines ----------------------------------------------
    def ensemble_rows(self, members: list[MemberRun]) -> dict[str, tuple[float, dict]]:
        ctx = self.final.ctx
        out = {}
        if self.task == "regression":
            sel_risk = mean_risk(np.column_stack([m.sel_scores for m in members]))
            t, _ = self._best_threshold(self.sel.ctx, sel_risk)
            risk = mean_risk(np.column_stack([m.test_scores for m in members]))
            out["mean_risk"] = (ctx.f1(risk >= t), {"threshold": t})
            return out
        votes = np.column_stack([m.test_alarms for m in members])
        for kind in self.cfg.ensembles:
            if kind == "simple":
                out[kind] = (ctx.f1(simple_majority(votes)), {})
            elif kind == "weighted":
                ref = [m.sel_f1 for m in members]
                w = f1_weights(ref) if sum(ref) > 0 else np.full(3, 1 / 3)
                out[kind] = (ctx.f1(weighted_vote(votes, w)), {"weights": w.tolist()})
            elif kind == "dynamic_weighted":
                w, f = fit_dynamic_weights(votes, ctx.f1)
                out[kind] = (f, {"weights": w.tolist(), "oracle": True})
            else:
                t, f = best_dynamic_threshold(votes, ctx.f1)
                out[kind] = (f, {"threshold": t, "oracle": True})
        return out

    def baseline(self, kind: str) -> tuple[float, dict]:
        trace = baseline_trace(kind, self.final.ctx.anchors, self.seed)
        outcome = self.final.ctx.outcome(trace.alarms)
        return outcome.f1, {"outcome": outcome.to_dict()}


def _plain(v):
    return list(v) if isinstance(v, tuple) else v


def resample_tag(cfg: ExperimentConfig) -> str:
    plan = cfg.resample
    return plan.mode if plan.inflate_factor == 1 else f"{plan.mode}x{plan.inflate_factor}"


def ensemble_key(cfg: ExperimentConfig) -> tuple[str, str]:
    algos = "+".join(a for a, _ in cfg.members)
    reds = "+".join(sorted({r for _, r in cfg.members}))
    return algos, reds


def expected_keys(cfg: ExperimentConfig, dataset: str, setting: str) -> list[CellKey]:
    tag = resample_tag(cfg)
    keys = [CellKey(dataset, setting, a, r, tag) for a in cfg.algorithms for r in cfg.reductions]
    if cfg.ensembles:
        algos, reds = ensemble_key(cfg)
        kinds = ["mean_risk"] if cfg.pipeline == "reg" else list(cfg.ensembles)
        keys += [CellKey(dataset, setting, algos, reds, tag, k) for k in kinds]
    if cfg.baselines:
        keys += [CellKey(dataset, setting, b) for b in BASELINE_ALGOS]
    return keys


def run_job(cfg: ExperimentConfig, dataset: str, seed: int, setting: str) -> dict:
    """All cell values of one (dataset, seed, setting); failures become NaN with an error."""
    results: dict[CellKey, tuple[float, dict]] = {}
    try:
        job = Job(cfg, dataset, seed, setting)
    except Exception as exc:  # the whole job is lost; every cell records it
        err = _error(exc)
        return {k: (math.nan, {"error": err}) for k in expected_keys(cfg, dataset, setting)}
    tag = resample_tag(cfg)
    runs: dict[tuple[str, str], MemberRun | Exception] = {}

    def member(a, r):
        if (a, r) not in runs:
            try:
                runs[(a, r)] = job.run_member(a, r)
            except Exception as exc:
                runs[(a, r)] = exc
        return runs[(a, r)]

    for a in cfg.algorithms:
        for r in cfg.reductions:
            m = member(a, r)
            key = CellKey(dataset, setting, a, r, tag)
            results[key] = (m.f1, m.detail) if isinstance(m, MemberRun) else (math.nan, {"error": _error(m)})
    if cfg.ensembles:
        algos, reds = ensemble_key(cfg)
        ms = [member(a, r) for a, r in cfg.members]
        kinds = ["mean_risk"] if cfg.pipeline == "reg" else list(cfg.ensembles)
        bad = [m for m in ms if not isinstance(m, MemberRun)]
        try:
            if bad:
                raise RuntimeError(f"ensemble member failed: {_error(bad[0])}")
            rows = job.ensemble_rows(ms)
        except Exception as exc:
            rows = {k: (math.nan, {"error": _error(exc)}) for k in kinds}
        for kind, val in rows.items():
            results[CellKey(dataset, setting, algos, reds, tag, kind)] = val
    if cfg.baselines:
        for b in BASELINE_ALGOS:
            results[CellKey(dataset, setting, b)] = job.baseline(b)
    return results


def _error(exc: BaseException) -> str:
    logger.debug("".join(traceback.format_exception(exc)))
    return f"{type(exc).__name__}: {exc}"


def _run_job_args(args):
    return run_job(*args)


def worker_count(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get("PDM_BENCH_WORKERS", default)))
    except ValueError:
        return default


def run_experiment(cfg: ExperimentConfig, workers: int | None = None, progress=None) -> ResultsTable:
    """Run every job of ``cfg`` and aggregate mean/min F1 per cell.

    Results are persisted under ``cfg.output`` when it is set. The table is
    identical for any worker count.
    """
    jobs = [(cfg, ds, seed, s) for ds in cfg.datasets for s in cfg.settings for seed in cfg.seeds]
    workers = worker_count() if workers is None else max(1, workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_job_args, jobs))
    else:
        outputs = []
        for i, args in enumerate(jobs):
            outputs.append(run_job(*args))
            if progress:
                progress(i + 1, len(jobs), args[1:])

    per_key: dict[CellKey, dict[int, tuple[float, dict]]] = {}
    for (_, ds, seed, s), out in zip(jobs, outputs):
        for key, val in out.items():
            per_key.setdefault(key, {})[seed] = val
    cells = {}
    for key, by_seed in per_key.items():
        vals = tuple(float(by_seed[s][0]) if s in by_seed else math.nan for s in cfg.seeds)
        details = [{"seed": s, **by_seed.get(s, (None, {"error": "missing"}))[1]} for s in cfg.seeds]
        cells[key] = Cell(cfg.seeds, vals, details)
    table = ResultsTable(cells, cfg.pipeline, cfg.mode)
    if cfg.output:
        os.makedirs(cfg.output, exist_ok=True)
        persist(table, cfg.output, {"pipeline": cfg.pipeline, "mode": cfg.mode})
        # The output location is not part of the experiment; leaving it out keeps
        # reruns into different directories byte-identical.
        atomic_write(os.path.join(cfg.output, "config.ini"), replace(cfg, output=None).to_ini())
    return table
