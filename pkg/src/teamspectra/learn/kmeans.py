"""Seeded k-means (k-means++ / Lloyd), inertia-elbow selection, cluster labeling."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from ..analytics.efa import FactorLabel, FactorModel, Level
from ..errors import AmbiguousLabeling, KTooLarge


class ClusterLabel(str, enum.Enum):
    Acquiring = "acquiring"
    Sharing = "sharing"
    Average = "average"
    Cooperative = "cooperative"
    NonCooperative = "non_cooperative"


@dataclass(frozen=True, eq=False)
class Clustering:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    labels: tuple[ClusterLabel, ...] | None = None
    inertia_history: tuple[float, ...] = field(default=(), repr=False)
    n_iter: int = 0

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)

    def row_labels(self) -> list[ClusterLabel]:
        if self.labels is None:
            raise ValueError("clusters are not labeled")
        return [self.labels[a] for a in self.assignments]


@dataclass(frozen=True)
class ElbowResult:
    k: int
    inertias: tuple[float, ...]
    flat: bool


def _sqdist(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _plus_plus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _lloyd(X: np.ndarray, C: np.ndarray, max_iter: int):
    history = []
    assign = None
    for it in range(1, max_iter + 1):
        d = _sqdist(X, C)
        new = np.argmin(d, axis=1)
        history.append(float(d[np.arange(X.shape[0]), new].sum()))
        if assign is not None and np.array_equal(new, assign):
            return C, assign, history, it
        assign = new
        C = C.copy()
        for j in range(C.shape[0]):
            members = assign == j
            if members.any():
                C[j] = X[members].mean(axis=0)
            else:
                # reseed an empty cluster on the point farthest from its centroid
                far = int(np.argmax(d[np.arange(X.shape[0]), assign]))
                C[j] = X[far]
                assign = assign.copy()
                assign[far] = j
    d = _sqdist(X, C)
    assign = np.argmin(d, axis=1)
    history.append(float(d[np.arange(X.shape[0]), assign].sum()))
    return C, assign, history, max_iter


def kmeans(X, k: int, seed: int = 0, n_init: int = 10, max_iter: int = 300) -> Clustering:
    """Best of ``n_init`` k-means++ restarts.

    Rows are processed in a canonical (lexicographic) order and clusters are
    numbered by lexicographic centroid order, so the result does not depend
    on the input row order.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n_distinct = np.unique(X, axis=0).shape[0]
    if k < 1 or k > n_distinct:
        raise KTooLarge(f"k={k} exceeds the {n_distinct} distinct rows")
    order = np.lexsort(X.T[::-1])
    Xs = X[order]
    best = None
    for child in np.random.SeedSequence(seed).spawn(n_init):
        rng = np.random.default_rng(child)
        C, assign, history, it = _lloyd(Xs, _plus_plus(Xs, k, rng), max_iter)
        if best is None or history[-1] < best[2][-1]:
            best = (C, assign, history, it)
    C, assign, history, it = best
    relabel = np.lexsort(C.T[::-1])
    inverse = np.empty(k, dtype=int)
    inverse[relabel] = np.arange(k)
    assignments = np.empty(X.shape[0], dtype=int)
    assignments[order] = inverse[assign]
    C = C[relabel]
    inertia = float(((X - C[assignments]) ** 2).sum())
    return Clustering(k, C, assignments, inertia, None, tuple(history), it)


def elbow(X, k_max: int = 10, seed: int = 0, flat_ratio: float = 0.2, **kw) -> ElbowResult:
    """k maximizing the second difference of the inertia curve over k = 1..k_max.

    A curve whose largest second difference is below ``flat_ratio`` of the
    one-cluster inertia has no elbow; k = 1 is returned with ``flat`` set.
    """
    if k_max < 3:
        raise ValueError("k_max must be at least 3")
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n_distinct = np.unique(X, axis=0).shape[0]
    inertias = []
    for k in range(1, k_max + 1):
        inertias.append(kmeans(X, k, seed, **kw).inertia if k <= n_distinct else 0.0)
    curve = np.array(inertias)
    if curve[0] <= 0:
        return ElbowResult(1, tuple(inertias), True)
    d2 = curve[:-2] - 2 * curve[1:-1] + curve[2:]  # d2[i] is the bend at k = i + 2
    i = int(np.argmax(d2))
    if d2[i] < flat_ratio * curve[0]:
        return ElbowResult(1, tuple(inertias), True)
    return ElbowResult(i + 2, tuple(inertias), False)


def _semantics(factor_semantics) -> dict[FactorLabel, int]:
    if isinstance(factor_semantics, FactorModel):
        if factor_semantics.factor_labels is None:
            raise ValueError("factor model is not labeled")
        return {lab: j for j, lab in enumerate(factor_semantics.factor_labels)}
    return {FactorLabel(k): int(v) for k, v in dict(factor_semantics).items()}


def _pick(values: np.ndarray, sizes: np.ndarray, highest: bool) -> int:
    # ties: larger cluster first, then lower index
    key = values if highest else -values
    best = key.max()
    tied = [j for j in range(values.size) if key[j] == best]
    return min(tied, key=lambda j: (-sizes[j], j))


def label_clusters(c: Clustering, factor_semantics: FactorModel | Mapping, level: Level | str) -> Clustering:
    """Attach per-cluster labels from centroid positions on labeled factor axes.

    Individual: highest Acquiring centroid -> Acquiring, highest Sharing
    centroid -> Sharing. Collective: highest Cooperative centroid ->
    Cooperative, highest NonCooperative centroid -> NonCooperative. The
    third cluster is Average. Factor orientation comes from
    :func:`~teamspectra.analytics.label_factors`, so a high score always
    means more of the factor's label.
    """
    if c.k != 3:
        raise ValueError("cluster labeling needs k = 3")
    level = Level(level)
    axes = _semantics(factor_semantics)
    sizes = c.sizes
    if level is Level.Individual:
        first = _pick(c.centroids[:, axes[FactorLabel.Acquiring]], sizes, True)
        second = _pick(c.centroids[:, axes[FactorLabel.Sharing]], sizes, True)
        names = (ClusterLabel.Acquiring, ClusterLabel.Sharing)
    else:
        first = _pick(c.centroids[:, axes[FactorLabel.Cooperative]], sizes, True)
        second = _pick(c.centroids[:, axes[FactorLabel.NonCooperative]], sizes, True)
        names = (ClusterLabel.Cooperative, ClusterLabel.NonCooperative)
    if first == second:
        raise AmbiguousLabeling(f"cluster {first} wins both {names[0].value} and {names[1].value}")
    labels = [ClusterLabel.Average] * 3
    labels[first], labels[second] = names
    return replace(c, labels=tuple(labels))
