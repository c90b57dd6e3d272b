"""Rank statistics and the chi-square tail, evaluated in log space."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

_EPS = 1e-12
_FPMIN = 1e-300
_MAX_ITER = 100_000


def midranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    sx = x[order]
    start = 0
    n = len(x)
    while start < n:
        stop = start + 1
        while stop < n and sx[stop] == sx[start]:
            stop += 1
        ranks[order[start:stop]] = 0.5 * (start + stop + 1)
        start = stop
    return ranks


def tie_counts(values: Sequence[float]) -> np.ndarray:
    _, counts = np.unique(np.asarray(values, dtype=float), return_counts=True)
    return counts


def _log_gamma_p_series(a: float, x: float) -> float:
    ap = a
    term = total = 1.0 / a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return math.log(total) - x + a * math.log(x) - math.lgamma(a)


def _log_gamma_q_cf(a: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.log(h) - x + a * math.log(x) - math.lgamma(a)


def log_gamma_q(a: float, x: float) -> float:
    """Natural log of the regularized upper incomplete gamma function Q(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 0.0
    if x < a + 1.0:
        p = math.exp(_log_gamma_p_series(a, x))
        return math.log1p(-p) if p < 1.0 else -math.inf
    return _log_gamma_q_cf(a, x)


def chi2_logsf(stat: float, df: int) -> float:
    """log of P(X >= stat) for X ~ chi-square(df)."""
    return log_gamma_q(df / 2.0, stat / 2.0)


def chi2_sf(stat: float, df: int) -> float:
    return math.exp(chi2_logsf(stat, df))


@dataclass(frozen=True)
class KWResult:
    H: float
    df: int
    p_value: float
    log10_p: float
    group_sizes: tuple[int, ...]
    all_tied: bool = False


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> KWResult:
    """Kruskal-Wallis H test with mid-rank ties and tie correction.

    When every observation is equal the statistic is undefined; by
    convention H = 0, p = 1 and ``all_tied`` is set.
    """
    groups = [np.asarray(g, dtype=float) for g in groups]
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    if any(g.size == 0 for g in groups):
        raise ValueError("every group must be non-empty")
    sizes = tuple(int(g.size) for g in groups)
    pooled = np.concatenate(groups)
    n = pooled.size
    df = len(groups) - 1
    ties = tie_counts(pooled)
    correction = 1.0 - float(np.sum(ties**3 - ties)) / (n**3 - n) if n > 1 else 0.0
    if correction <= 0.0:
        return KWResult(0.0, df, 1.0, 0.0, sizes, all_tied=True)
    ranks = midranks(pooled)
    bounds = np.cumsum((0,) + sizes)
    s = sum(ranks[bounds[i] : bounds[i + 1]].sum() ** 2 / sizes[i] for i in range(len(sizes)))
    H = (12.0 / (n * (n + 1)) * s - 3.0 * (n + 1)) / correction
    H = max(float(H), 0.0)
    logp = chi2_logsf(H, df)
    return KWResult(H, df, math.exp(logp), logp / math.log(10.0), sizes)
