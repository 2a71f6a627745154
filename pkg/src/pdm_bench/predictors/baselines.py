from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Baseline:
    """Dummy scorer: ``all_true`` always alarms, ``random`` flips a seeded fair coin."""

    kind: str
    seed: int = 0

    def predict(self, X) -> np.ndarray:
        n = len(X)
        if self.kind == "all_true":
            return np.ones(n)
        # Same draw as evaluation.baseline_trace for equal seeds.
        return np.random.default_rng(self.seed).integers(0, 2, n).astype(float)
