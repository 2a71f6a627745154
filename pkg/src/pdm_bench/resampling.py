"""Class balancing by duplicating minority rows or dropping majority rows.

Rows are never modified, only their multiplicity. For regression labels the
classes are ``y >= threshold`` and ``y < threshold``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODES = ("none", "undersample", "oversample")


class ResampleError(ValueError):
    pass


@dataclass(frozen=True)
class ResamplePlan:
    mode: str = "none"
    inflate_factor: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown resample mode {self.mode!r}")
        if self.inflate_factor < 1:
            raise ValueError("inflate_factor must be >= 1")


def _classes(y, threshold):
    pos = np.asarray(y, dtype=float).reshape(-1) >= threshold
    ip, ineg = np.flatnonzero(pos), np.flatnonzero(~pos)
    if len(ip) == 0 or len(ineg) == 0:
        raise ResampleError("resampling needs both classes present")
    return ip, ineg


def resample_indices(y, plan: ResamplePlan, threshold: float = 0.5) -> np.ndarray:
    """Row indices (with repeats) realizing ``plan``; ascending before inflation."""
    n = len(y)
    if plan.mode == "none":
        idx = np.arange(n)
    else:
        ip, ineg = _classes(y, threshold)
        small, big = (ip, ineg) if len(ip) <= len(ineg) else (ineg, ip)
        rng = np.random.default_rng(plan.seed)
        if plan.mode == "undersample":
            idx = np.concatenate([small, rng.choice(big, len(small), replace=False)])
        else:
            idx = np.concatenate([np.arange(n), rng.choice(small, len(big) - len(small), replace=True)])
        idx = np.sort(idx)
    return np.tile(idx, plan.inflate_factor)


def undersample(X, y, plan: ResamplePlan, threshold: float = 0.5):
    idx = resample_indices(y, ResamplePlan("undersample", plan.inflate_factor, plan.seed), threshold)
    return np.asarray(X)[idx], np.asarray(y)[idx]


def oversample(X, y, plan: ResamplePlan, threshold: float = 0.5):
    idx = resample_indices(y, ResamplePlan("oversample", plan.inflate_factor, plan.seed), threshold)
    return np.asarray(X)[idx], np.asarray(y)[idx]


def apply(X, y, plan: ResamplePlan, threshold: float = 0.5):
    idx = resample_indices(y, plan, threshold)
    return np.asarray(X)[idx], np.asarray(y)[idx]
