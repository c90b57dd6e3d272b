"""Binary logistic regression fitted by Newton's method (IRLS)."""

from __future__ import annotations

import numpy as np


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def penalized_loglik(w: np.ndarray, X1: np.ndarray, y: np.ndarray, ridge: float) -> float:
    """Log-likelihood minus (ridge / 2) * ||w||^2, intercept (column 0) unpenalized."""
    z = X1 @ w
    # log(1 + e^z) computed stably
    ll = float(np.sum(y * z - np.logaddexp(0.0, z)))
    return ll - 0.5 * ridge * float(w[1:] @ w[1:])


def penalized_gradient(w: np.ndarray, X1: np.ndarray, y: np.ndarray, ridge: float) -> np.ndarray:
    g = X1.T @ (y - _sigmoid(X1 @ w))
    g[1:] -= ridge * w[1:]
    return g


class LogisticRegression:
    kind = "blr"

    def __init__(self, ridge: float = 1e-6, tol: float = 1e-8, max_iter: int = 100):
        self.ridge = ridge
        self.tol = tol
        self.max_iter = max_iter
        self.single_class = False
        self.converged = False
        self.loglik_history: list[float] = []

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n, p = X.shape
        self.n_features_ = p
        self.feature_sd_ = X.std(axis=0)
        if np.unique(y).size < 2:
            self.single_class = True
            self.coef_ = np.zeros(p)
            self.constant_ = float(y.mean()) if y.size else 0.5
            return self
        X1 = np.column_stack([np.ones(n), X])
        w = np.zeros(p + 1)
        w[0] = np.log(y.mean() / (1.0 - y.mean()))
        penalty = np.full(p + 1, self.ridge)
        penalty[0] = 0.0
        ll = penalized_loglik(w, X1, y, self.ridge)
        self.loglik_history = [ll]
        for _ in range(self.max_iter):
            grad = penalized_gradient(w, X1, y, self.ridge)
            if np.linalg.norm(grad) <= self.tol:
                self.converged = True
                break
            mu = _sigmoid(X1 @ w)
            weights = mu * (1.0 - mu)
            H = (X1 * weights[:, None]).T @ X1 + np.diag(penalty)
            step = np.linalg.solve(H, grad)
            # step halving keeps the objective non-decreasing
            t = 1.0
            while True:
                cand = w + t * step
                cand_ll = penalized_loglik(cand, X1, y, self.ridge)
                if cand_ll >= ll or t < 1e-10:
                    break
                t *= 0.5
            if cand_ll < ll:
                self.converged = True
                break
            w, ll = cand, cand_ll
            self.loglik_history.append(ll)
        else:
            grad = penalized_gradient(w, X1, y, self.ridge)
            self.converged = bool(np.linalg.norm(grad) <= self.tol)
        self.intercept_ = float(w[0])
        self.coef_ = w[1:].copy()
        self.gradient_norm_ = float(np.linalg.norm(penalized_gradient(w, X1, y, self.ridge)))
        return self

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef_ + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.single_class:
            return np.full(X.shape[0], self.constant_)
        return _sigmoid(self.decision_function(X))

    def importances(self) -> np.ndarray:
        """|coefficient| x feature sd, normalized to sum to one."""
        raw = np.abs(self.coef_) * self.feature_sd_
        total = raw.sum()
        return raw / total if total > 0 else np.full(self.n_features_, 1.0 / self.n_features_)
