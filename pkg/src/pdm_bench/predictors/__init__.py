"""Common fit/predict contract over all predictors.

``fit(cfg, X, y)`` returns an immutable :class:`FittedModel`; ``predict``
returns scores in [0, 1] and ``decide`` thresholds them at 0.5.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping

import numpy as np

from .baselines import Baseline
from .knn import KNN
from .mlp import MLP, MLPState, init_state, loss_and_grads, mlp_train_step
from .pls import PLS
from .scaling import Standardizer
from .trees import BoostState, Forest, Tree, fit_forest, fit_gbt, fit_tree, gbt_round

ALGORITHMS = ("knn", "rf", "gbt", "pls", "mlp", "random", "all_true")
TASKS = ("classification", "regression")
ENVELOPE_VERSION = 1

DEFAULTS: dict[str, dict[str, Any]] = {
    "knn": {"k": 5},
    "rf": {"trees": 200, "max_depth": 12, "feature_subset": "sqrt", "bootstrap": True},
    "gbt": {"rounds": 200, "learning_rate": 0.1, "max_depth": 4, "objective": None},
    "pls": {"components": None},
    "mlp": {"epochs": 150, "batch": 32, "lr": 1e-3, "hidden": (128, 64, 128)},
    "random": {},
    "all_true": {},
}

_COUNT_KEYS = {"k", "trees", "max_depth", "rounds", "components", "epochs", "batch"}


class PredictorError(ValueError):
    pass


@dataclass(frozen=True)
class PredictorConfig:
    algorithm: str
    task: str = "classification"
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise PredictorError(f"unknown algorithm {self.algorithm!r}")
        if self.task not in TASKS:
            raise PredictorError(f"unknown task {self.task!r}")
        unknown = set(self.params) - set(DEFAULTS[self.algorithm])
        if unknown:
            raise PredictorError(f"unknown {self.algorithm} parameters: {sorted(unknown)}")
        merged = {**DEFAULTS[self.algorithm], **self.params}
        for key in _COUNT_KEYS & set(merged):
            if merged[key] is not None and int(merged[key]) < 1:
                raise PredictorError(f"{self.algorithm}.{key} must be >= 1")
        if self.algorithm == "knn" and not 1 <= merged["k"] <= 5:
            raise PredictorError("knn.k must lie in [1, 5]")
        object.__setattr__(self, "params", MappingProxyType(merged))

    def with_params(self, **params) -> "PredictorConfig":
        return dataclasses.replace(self, params={**self.params, **params})

    def to_dict(self) -> dict:
        return {"algorithm": self.algorithm, "task": self.task,
                "params": _plain(dict(self.params)), "seed": self.seed}

    @property
    def label(self) -> str:
        if self.algorithm == "knn":
            return f"knn(k={self.params['k']})"
        return self.algorithm


@dataclass(frozen=True)
class FittedModel:
    algorithm: str
    task: str
    n_features: int
    state: Any
    config: PredictorConfig


def _check_xy(X, y, task):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise PredictorError("X must be a non-empty 2-D matrix")
    if len(y) != len(X):
        raise PredictorError("X and y lengths differ")
    if task == "classification" and not np.isin(y, (0.0, 1.0)).all():
        raise PredictorError("classification labels must be 0 or 1")
    if task == "regression" and (np.any(y < 0) or np.any(y > 1)):
        raise PredictorError("regression labels must lie in [0, 1]")
    return X, y


def fit(cfg: PredictorConfig, X, y) -> FittedModel:
    """Fit the configured predictor; deterministic in ``(cfg, X, y)``."""
    X, y = _check_xy(X, y, cfg.task)
    p = cfg.params
    a = cfg.algorithm
    if a == "knn":
        state = KNN.fit(X, y, k=int(p["k"]))
    elif a == "rf":
        state = fit_forest(X, y, trees=int(p["trees"]), max_depth=int(p["max_depth"]),
                           feature_subset=p["feature_subset"], bootstrap=bool(p["bootstrap"]),
                           seed=cfg.seed)
    elif a == "gbt":
        objective = p["objective"] or ("logistic" if cfg.task == "classification" else "squared")
        state = fit_gbt(X, y, rounds=int(p["rounds"]), learning_rate=float(p["learning_rate"]),
                        max_depth=int(p["max_depth"]), objective=objective)
    elif a == "pls":
        state = PLS.fit(X, y, components=p["components"])
    elif a == "mlp":
        state = MLP.fit(X, y, hidden=tuple(p["hidden"]), epochs=int(p["epochs"]),
                        batch=int(p["batch"]), lr=float(p["lr"]),
                        loss="bce" if cfg.task == "classification" else "mse", seed=cfg.seed)
    else:
        state = Baseline(a, cfg.seed)
    return FittedModel(a, cfg.task, X.shape[1], state, cfg)


def predict(model: FittedModel, X) -> np.ndarray:
    """Scores in [0, 1], one per row of ``X``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise PredictorError(f"expected {model.n_features} features, got shape {X.shape}")
    return np.clip(model.state.predict(X), 0.0, 1.0)


def decide(model: FittedModel, X, threshold: float = 0.5) -> np.ndarray:
    """Binary decisions ``score >= threshold`` (a 0.5 tie alarms)."""
    return (predict(model, X) >= threshold).astype(np.int8)


# JSON envelope -------------------------------------------------------------

_TYPES = {c.__name__: c for c in (KNN, PLS, MLP, Standardizer, BoostState, Forest, Tree, Baseline)}


def _plain(obj):
    if isinstance(obj, tuple):
        return list(obj)
    return obj


def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {"__ndarray__": obj.ravel().tolist(), "dtype": str(obj.dtype), "shape": list(obj.shape)}
    if dataclasses.is_dataclass(obj) and type(obj).__name__ in _TYPES:
        out = {"__type__": type(obj).__name__}
        for f in dataclasses.fields(obj):
            out[f.name] = _encode(getattr(obj, f.name))
        return out
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__ndarray__" in obj:
            return np.array(obj["__ndarray__"], dtype=obj["dtype"]).reshape(obj["shape"])
        if "__type__" in obj:
            cls = _TYPES[obj["__type__"]]
            return cls(**{k: _decode(v) for k, v in obj.items() if k != "__type__"})
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def dumps(model: FittedModel) -> str:
    envelope = {"format": "pdm-bench-model", "version": ENVELOPE_VERSION,
                "config": model.config.to_dict(), "n_features": model.n_features,
                "state": _encode(model.state)}
    return json.dumps(envelope, sort_keys=True)


def loads(text: str) -> FittedModel:
    env = json.loads(text)
    if env.get("format") != "pdm-bench-model" or env.get("version") != ENVELOPE_VERSION:
        raise PredictorError("not a supported model envelope")
    c = env["config"]
    params = {k: tuple(v) if isinstance(v, list) else v for k, v in c["params"].items()}
    cfg = PredictorConfig(c["algorithm"], c["task"], params, c["seed"])
    return FittedModel(cfg.algorithm, cfg.task, env["n_features"], _decode(env["state"]), cfg)


__all__ = [
    "ALGORITHMS", "DEFAULTS", "PredictorConfig", "PredictorError", "FittedModel", "fit",
    "predict", "decide", "dumps", "loads", "KNN", "PLS", "MLP", "MLPState", "init_state",
    "loss_and_grads", "mlp_train_step", "BoostState", "Forest", "Tree", "fit_tree", "fit_gbt",
    "fit_forest", "gbt_round", "Baseline",
]
