"""Multicollinearity and sampling-adequacy diagnostics."""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateMatrix, SingularCorrelation

VIF_CAP = 1e6


def _as_matrix(X) -> np.ndarray:
    values = getattr(X, "values", X)
    return np.asarray(values, dtype=float)


def correlation_matrix(X) -> np.ndarray:
    X = _as_matrix(X)
    sd = X.std(axis=0)
    if np.any(sd == 0):
        raise DegenerateMatrix(f"constant column(s) at {np.flatnonzero(sd == 0).tolist()}")
    Z = (X - X.mean(axis=0)) / sd
    R = Z.T @ Z / X.shape[0]
    np.fill_diagonal(R, 1.0)
    return R


def vif(X) -> np.ndarray:
    """Variance inflation factor per column, 1 / (1 - R^2_j), capped at 1e6.

    R^2_j comes from least-squares regression (with intercept) of column j on
    the remaining columns.
    """
    X = _as_matrix(X)
    n, p = X.shape
    if p < 2:
        raise ValueError("need at least two columns")
    if n <= p:
        raise ValueError("need more rows than columns")
    if np.any(X.std(axis=0) == 0):
        raise DegenerateMatrix("constant column")
    out = np.empty(p)
    for j in range(p):
        y = X[:, j]
        A = np.column_stack([np.ones(n), np.delete(X, j, axis=1)])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = y - A @ coef
        ss_tot = float(((y - y.mean()) ** 2).sum())
        r2 = 1.0 - float(resid @ resid) / ss_tot
        out[j] = VIF_CAP if r2 >= 1.0 - 1.0 / VIF_CAP else min(1.0 / (1.0 - r2), VIF_CAP)
    return np.maximum(out, 1.0)


def anti_image_correlation(R: np.ndarray) -> np.ndarray:
    """Partial correlations q_ij = -P_ij / sqrt(P_ii P_jj) with P = R^-1."""
    try:
        P = np.linalg.inv(R)
    except np.linalg.LinAlgError as exc:
        raise SingularCorrelation(str(exc)) from None
    if not np.all(np.isfinite(P)) or np.linalg.cond(R) > 1e12:
        raise SingularCorrelation("correlation matrix is numerically singular")
    d = np.sqrt(np.diag(P))
    Q = -P / np.outer(d, d)
    np.fill_diagonal(Q, 1.0)
    return Q


def kmo_from_correlation(R: np.ndarray, tol: float = 1e-12) -> float:
    R = np.asarray(R, dtype=float)
    off = ~np.eye(R.shape[0], dtype=bool)
    r2 = float((R[off] ** 2).sum())
    if np.all(np.abs(R[off]) < tol):
        raise DegenerateMatrix("no off-diagonal correlation; KMO has nothing to assess")
    Q = anti_image_correlation(R)
    q2 = float((Q[off] ** 2).sum())
    return r2 / (r2 + q2)


def kmo(X) -> float:
    """Overall Kaiser-Meyer-Olkin measure of sampling adequacy."""
    return kmo_from_correlation(correlation_matrix(X))
