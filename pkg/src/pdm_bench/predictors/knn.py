"""k-nearest-neighbour scorer on z-scored features (Euclidean distance)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scaling import Standardizer


@dataclass
class KNN:
    k: int
    scaler: Standardizer
    X: np.ndarray  # standardized training rows
    y: np.ndarray

    @classmethod
    def fit(cls, X, y, k: int = 5) -> "KNN":
        scaler = Standardizer.fit(X)
        return cls(k, scaler, scaler.transform(X), np.asarray(y, dtype=float))

    def neighbors(self, X, chunk: int = 256) -> np.ndarray:
        """Indices of the k nearest training rows; ties go to the lower index."""
        Q = self.scaler.transform(X)
        k = min(self.k, len(self.y))
        sq_train = np.einsum("ij,ij->i", self.X, self.X)
        out = np.empty((len(Q), k), dtype=np.int64)
        for lo in range(0, len(Q), chunk):
            q = Q[lo:lo + chunk]
            d2 = np.einsum("ij,ij->i", q, q)[:, None] + sq_train[None, :] - 2.0 * q @ self.X.T
            out[lo:lo + chunk] = np.argsort(np.maximum(d2, 0.0), axis=1, kind="stable")[:, :k]
        return out

    def predict(self, X) -> np.ndarray:
        """Mean label of the k nearest neighbours (positive fraction for 0/1 labels)."""
        return self.y[self.neighbors(X)].mean(axis=1)
