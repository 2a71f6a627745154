"""PLS1 regression with SVD-derived weight vectors and deflation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scaling import Standardizer


@dataclass
class PLS:
    scaler: Standardizer
    y_mean: float
    coef: np.ndarray
    n_components: int

    @classmethod
    def fit(cls, X, y, components: int | None = None, tol: float = 1e-12) -> "PLS":
        scaler = Standardizer.fit(X)
        Xk = scaler.transform(X)
        y = np.asarray(y, dtype=float)
        y_mean = float(y.mean())
        yk = y - y_mean
        n, d = Xk.shape
        A = min(8, d) if components is None else min(components, d)
        W, P, q = [], [], []
        for _ in range(A):
            cross = Xk.T @ yk
            if np.linalg.norm(cross) <= tol * max(1.0, np.abs(y).sum()):
                break
            # Leading left singular vector of the cross-covariance.
            u, _, _ = np.linalg.svd(cross[:, None], full_matrices=False)
            w = u[:, 0]
            if w @ cross < 0:
                w = -w
            t = Xk @ w
            tt = t @ t
            if tt <= tol:
                break
            p = Xk.T @ t / tt
            qa = yk @ t / tt
            Xk = Xk - np.outer(t, p)
            yk = yk - qa * t
            W.append(w)
            P.append(p)
            q.append(qa)
        if not W:
            return cls(scaler, y_mean, np.zeros(d), 0)
        W = np.array(W).T
        P = np.array(P).T
        coef = W @ np.linalg.solve(P.T @ W, np.array(q))
        return cls(scaler, y_mean, coef, W.shape[1])

    def decision_function(self, X) -> np.ndarray:
        return self.y_mean + self.scaler.transform(X) @ self.coef

    def predict(self, X) -> np.ndarray:
        return np.clip(self.decision_function(X), 0.0, 1.0)
