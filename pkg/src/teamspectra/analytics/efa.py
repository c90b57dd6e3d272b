"""Exploratory factor analysis by principal-axis factoring.

Communalities start at the squared multiple correlations and are refined by
repeated eigen-decomposition of the reduced correlation matrix. Factor
scores use the regression (Thurstone) estimator ``Z R^-1 L``.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..errors import AmbiguousPattern, NonConvergence
from .diagnostics import correlation_matrix

logger = logging.getLogger(__name__)

AUTO = "auto"


class Level(enum.Enum):
    Individual = "individual"
    Collective = "collective"


class FactorLabel(enum.Enum):
    Acquiring = "acquiring"
    Sharing = "sharing"
    Cooperative = "cooperative"
    NonCooperative = "non_cooperative"


class HeywoodWarning(UserWarning):
    """A communality exceeded 1 and was clipped."""


class NonConvergenceWarning(UserWarning):
    """Communalities were still changing when the iteration cap was reached."""


@dataclass(frozen=True, eq=False)
class FactorModel:
    loadings: np.ndarray
    eigenvalues: np.ndarray
    communalities: np.ndarray
    scores: np.ndarray
    n_factors: int
    feature_names: tuple[str, ...]
    factor_labels: tuple[FactorLabel, ...] | None = None
    iterations: int = 0
    reconstruction_errors: tuple[float, ...] = field(default=(), repr=False)
    heywood: bool = False
    rotation: str | None = None
    converged: bool = True

    def column(self, label: FactorLabel) -> int:
        if self.factor_labels is None:
            raise ValueError("factors are not labeled")
        return self.factor_labels.index(label)


def _unpack(X, feature_names):
    names = getattr(X, "columns", None)
    values = np.asarray(getattr(X, "values", X), dtype=float)
    if feature_names is None:
        feature_names = names if names is not None else [f"x{i}" for i in range(values.shape[1])]
    return values, tuple(feature_names)


def scree_elbow(eigenvalues: Sequence[float]) -> int:
    """Number of factors before the largest second difference of the eigenvalues.

    Ties go to the candidate closest to the Kaiser count (eigenvalues > 1).
    """
    e = np.sort(np.asarray(eigenvalues, dtype=float))[::-1]
    kaiser = int((e > 1.0).sum())
    if e.size < 3:
        return max(kaiser, 1)
    d2 = e[:-2] - 2 * e[1:-1] + e[2:]
    # d2[i] is the curvature at eigenvalue i + 1; retain the i + 1 factors before it
    best = d2.max()
    scale = max(abs(best), 1.0)
    candidates = [i + 1 for i in np.flatnonzero(d2 >= best - 1e-9 * scale)]
    return min(candidates, key=lambda n: (abs(n - kaiser), n))


def smc(R: np.ndarray) -> np.ndarray:
    """Squared multiple correlation of each variable with all the others."""
    try:
        return 1.0 - 1.0 / np.diag(np.linalg.inv(R))
    except np.linalg.LinAlgError:
        off = np.abs(R - np.eye(len(R)))
        return off.max(axis=1) ** 2


def varimax(L: np.ndarray, max_iter: int = 500, tol: float = 1e-10) -> np.ndarray:
    """Orthogonal varimax rotation with Kaiser normalization."""
    p, k = L.shape
    if k < 2:
        return L.copy()
    h = np.sqrt((L**2).sum(axis=1))
    h = np.where(h > 0, h, 1.0)
    A = L / h[:, None]
    T = np.eye(k)
    crit = 0.0
    for _ in range(max_iter):
        B = A @ T
        U, s, Vt = np.linalg.svd(A.T @ (B**3 - B @ np.diag((B**2).sum(axis=0)) / p))
        T = U @ Vt
        new = s.sum()
        if new < crit * (1 + tol):
            break
        crit = new
    return (A @ T) * h[:, None]


def _apply_sign_convention(L: np.ndarray, F: np.ndarray):
    L, F = L.copy(), F.copy()
    for f in range(L.shape[1]):
        if L[np.argmax(np.abs(L[:, f])), f] < 0:
            L[:, f] *= -1
            F[:, f] *= -1
    return L, F


def efa(
    X,
    n_factors: int | str = AUTO,
    feature_names: Sequence[str] | None = None,
    rotation: str | None = None,
    sign_convention: bool = True,
    tol: float = 1e-6,
    max_iter: int = 200,
    strict: bool = True,
) -> FactorModel:
    """Principal-axis factoring of the correlation matrix of ``X``.

    ``n_factors="auto"`` picks the scree elbow. ``rotation`` may be ``None``
    or ``"varimax"``. With ``sign_convention`` each factor is flipped so its
    largest-magnitude loading is positive. When the communalities have not
    settled after ``max_iter`` rounds, :class:`NonConvergence` is raised, or
    with ``strict=False`` a :class:`NonConvergenceWarning` is issued and the
    last iterate is returned with ``converged=False``.
    """
    values, names = _unpack(X, feature_names)
    n, p = values.shape
    R = correlation_matrix(values)
    eig_all = np.sort(np.linalg.eigvalsh(R))[::-1]
    k = scree_elbow(eig_all) if n_factors == AUTO else int(n_factors)
    if not 1 <= k < p:
        raise ValueError(f"n_factors must be in 1..{p - 1}, got {k}")
    if n <= p:
        raise ValueError("need more rows than columns")

    h2 = np.clip(smc(R), 0.0, 1.0)
    errors = []
    heywood = False
    converged = True
    for it in range(1, max_iter + 1):  # noqa: B007 (reported after the loop)
        Rr = R.copy()
        np.fill_diagonal(Rr, h2)
        vals, vecs = np.linalg.eigh(Rr)
        top = np.argsort(vals)[::-1][:k]
        L = vecs[:, top] * np.sqrt(np.clip(vals[top], 0.0, None))
        errors.append(float(np.abs(Rr - L @ L.T).max()))
        new = (L**2).sum(axis=1)
        if np.any(new > 1.0):
            heywood = True
            new = np.minimum(new, 1.0)
        delta = float(np.abs(new - h2).max())
        h2 = new
        if delta < tol:
            break
    else:
        msg = f"communalities still moving by {delta:.3g} after {max_iter} iterations"
        if strict:
            raise NonConvergence(msg)
        warnings.warn(msg, NonConvergenceWarning, stacklevel=2)
        converged = False
    if heywood:
        warnings.warn("communality above 1 clipped (Heywood case)", HeywoodWarning, stacklevel=2)

    if rotation == "varimax":
        L = varimax(L)
    elif rotation not in (None, "none"):
        raise ValueError(f"unknown rotation {rotation!r}")

    Z = (values - values.mean(axis=0)) / values.std(axis=0)
    F = Z @ np.linalg.solve(R, L)
    if sign_convention:
        L, F = _apply_sign_convention(L, F)
    logger.debug("efa: %d factors, %d iterations", k, it)
    return FactorModel(
        loadings=L,
        eigenvalues=eig_all,
        communalities=(L**2).sum(axis=1),
        scores=F,
        n_factors=k,
        feature_names=names,
        iterations=it,
        reconstruction_errors=tuple(errors),
        heywood=heywood,
        rotation=rotation if rotation != "none" else None,
        converged=converged,
    )


INDIVIDUAL_RESOURCE = "gold_pm"
INDIVIDUAL_SHARING = ("vision_pm", "player_out_degree")
COLLECTIVE_RESOURCE = "avg_gold_pm"
COLLECTIVE_CENTRALIZATION = ("team_in_centrality", "team_out_centrality")


def _pick(scores: np.ndarray, largest: bool, what: str) -> int:
    order = np.argsort(scores)
    a, b = (order[-1], order[-2]) if largest else (order[0], order[1])
    if np.isclose(scores[a], scores[b], rtol=0, atol=1e-12):
        raise AmbiguousPattern(f"{what} does not separate the factors")
    return int(a)


def label_factors(model: FactorModel, level: Level | str) -> FactorModel:
    """Name the two factors and orient them so a high score means more of the label.

    Individual: the factor loading hardest on gold per minute is Acquiring;
    the one loading hardest on vision and out-degree is Sharing.
    Collective: the factor loading hardest on average gold per minute and
    least on the two centralizations is Cooperative, the other
    NonCooperative. Cooperative is oriented with average gold positive,
    NonCooperative with centralization positive. Conflicting criteria raise
    :class:`AmbiguousPattern`.
    """
    level = Level(level)
    if model.n_factors != 2:
        raise ValueError("labeling needs exactly two factors")
    names = list(model.feature_names)
    L = model.loadings
    absL = np.abs(L)
    if level is Level.Individual:
        resource = names.index(INDIVIDUAL_RESOURCE)
        other = [names.index(c) for c in INDIVIDUAL_SHARING]
        first = _pick(absL[resource], True, "gold loading")
        second = _pick(absL[other].mean(axis=0), True, "sharing loadings")
        labels = (FactorLabel.Acquiring, FactorLabel.Sharing)
    else:
        resource = names.index(COLLECTIVE_RESOURCE)
        other = [names.index(c) for c in COLLECTIVE_CENTRALIZATION]
        first = _pick(absL[resource], True, "average gold loading")
        low_cent = _pick(absL[other].mean(axis=0), False, "centralization loadings")
        if low_cent != first:
            raise AmbiguousPattern("average gold and centralization point to different factors")
        second = 1 - first
        labels = (FactorLabel.Cooperative, FactorLabel.NonCooperative)
    if first == second:
        raise AmbiguousPattern(f"one factor satisfies both the {labels[0].name} and {labels[1].name} rules")

    factor_labels = [None, None]
    factor_labels[first] = labels[0]
    factor_labels[second] = labels[1]
    signs = np.ones(2)
    if L[resource, first] < 0:
        signs[first] = -1.0
    if L[other, second].sum() < 0:
        signs[second] = -1.0
    return replace(
        model,
        loadings=L * signs,
        scores=model.scores * signs,
        factor_labels=tuple(factor_labels),
    )
