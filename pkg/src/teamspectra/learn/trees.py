"""CART classification trees, bagged forests and second-order gradient boosting.

Split search sorts the node's rows once per candidate feature and scores
every cut position from cumulative sums, so each tree level costs
O(n log n) per feature.
"""

from __future__ import annotations

import numpy as np

from .logistic import _sigmoid

_LEAF = -1


class _Tree:
    """Flat array representation; node 0 is the root."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.n_samples: list[int] = []
        self.impurity: list[float] = []
        self.depth: list[int] = []

    def add(self, value: float, n: int, impurity: float, depth: int) -> int:
        self.feature.append(_LEAF)
        self.threshold.append(0.0)
        self.left.append(_LEAF)
        self.right.append(_LEAF)
        self.value.append(value)
        self.n_samples.append(n)
        self.impurity.append(impurity)
        self.depth.append(depth)
        return len(self.value) - 1

    def freeze(self):
        self.feature_ = np.array(self.feature, dtype=int)
        self.threshold_ = np.array(self.threshold)
        self.left_ = np.array(self.left, dtype=int)
        self.right_ = np.array(self.right, dtype=int)
        self.value_ = np.array(self.value)
        return self

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature_[node]
            active = f != _LEAF
            if not active.any():
                return node
            r, n = rows[active], node[active]
            go_left = X[r, f[active]] <= self.threshold_[n]
            node[r] = np.where(go_left, self.left_[n], self.right_[n])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value_[self.apply(X)]

    @property
    def n_leaves(self) -> int:
        return int(sum(1 for f in self.feature if f == _LEAF))


def _valid_cuts(xs: np.ndarray, min_left: int) -> np.ndarray:
    """Boolean mask over cut positions i = 1..n-1 (left = first i sorted rows)."""
    n = xs.size
    i = np.arange(1, n)
    return (xs[1:] > xs[:-1]) & (i >= min_left) & (n - i >= min_left)


def _threshold(xs: np.ndarray, i: int) -> float:
    thr = 0.5 * (xs[i - 1] + xs[i])
    return float(xs[i - 1]) if thr >= xs[i] else float(thr)


def _gini(pos: float, n: float) -> float:
    if n == 0:
        return 0.0
    q = pos / n
    return 2.0 * q * (1.0 - q)


class DecisionTree:
    """CART with Gini impurity; leaves predict the positive-class fraction."""

    kind = "tree"

    def __init__(self, max_depth: int = 6, min_leaf: int = 20, max_features: int | None = None, seed: int | None = 0):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.seed = seed
        self.single_class = False

    def fit(self, X, y, rows: np.ndarray | None = None, rng: np.random.Generator | None = None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.n_features_ = X.shape[1]
        rows = np.arange(X.shape[0]) if rows is None else np.asarray(rows)
        self.single_class = np.unique(y[rows]).size < 2
        rng = rng if rng is not None else np.random.default_rng(self.seed)
        self.gain_ = np.zeros(self.n_features_)
        self._n_total = rows.size
        tree = _Tree()
        stack = [(rows, 0, tree.add(float(y[rows].mean()), rows.size, _gini(y[rows].sum(), rows.size), 0))]
        while stack:
            idx, depth, node = stack.pop()
            if depth >= self.max_depth or idx.size < 2 * self.min_leaf:
                continue
            split = self._best_split(X, y, idx, rng)
            if split is None:
                continue
            f, thr, gain = split
            mask = X[idx, f] <= thr
            li, ri = idx[mask], idx[~mask]
            tree.feature[node] = f
            tree.threshold[node] = thr
            tree.left[node] = tree.add(float(y[li].mean()), li.size, _gini(y[li].sum(), li.size), depth + 1)
            tree.right[node] = tree.add(float(y[ri].mean()), ri.size, _gini(y[ri].sum(), ri.size), depth + 1)
            self.gain_[f] += gain
            stack.append((ri, depth + 1, tree.right[node]))
            stack.append((li, depth + 1, tree.left[node]))
        self.tree_ = tree.freeze()
        return self

    def _features(self, rng):
        p = self.n_features_
        if self.max_features is None or self.max_features >= p:
            return range(p)
        return np.sort(rng.choice(p, size=self.max_features, replace=False))

    def _best_split(self, X, y, idx, rng):
        n = idx.size
        total_pos = float(y[idx].sum())
        parent = n * _gini(total_pos, n)
        best = None
        best_child = parent
        for f in self._features(rng):
            x = X[idx, f]
            order = np.argsort(x, kind="stable")
            xs = x[order]
            cum = np.cumsum(y[idx][order])[:-1]
            nl = np.arange(1, n, dtype=float)
            nr = n - nl
            pl = cum
            pr = total_pos - pl
            child = 2.0 * pl * (nl - pl) / nl + 2.0 * pr * (nr - pr) / nr
            child = np.where(_valid_cuts(xs, self.min_leaf), child, np.inf)
            i = int(np.argmin(child))
            if child[i] < best_child - 1e-12 * max(parent, 1.0):
                best_child = float(child[i])
                best = (int(f), _threshold(xs, i + 1), (parent - best_child) / self._n_total)
        return best

    def predict_proba(self, X) -> np.ndarray:
        return self.tree_.predict(np.asarray(X, dtype=float))

    def importances(self) -> np.ndarray:
        total = self.gain_.sum()
        return self.gain_ / total if total > 0 else np.full(self.n_features_, 1.0 / self.n_features_)


class RandomForest:
    """Bootstrap-aggregated CART trees with sqrt(p) candidate features per split."""

    kind = "forest"

    def __init__(self, n_trees: int = 100, max_depth: int = 6, min_leaf: int = 20, seed: int = 0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.seed = seed
        self.single_class = False

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n, p = X.shape
        self.n_features_ = p
        self.single_class = np.unique(y).size < 2
        max_features = max(1, int(np.sqrt(p)))
        self.trees_ = []
        for child in np.random.SeedSequence(self.seed).spawn(self.n_trees):
            rng = np.random.default_rng(child)
            rows = np.sort(rng.integers(0, n, size=n))
            tree = DecisionTree(self.max_depth, self.min_leaf, max_features=max_features)
            self.trees_.append(tree.fit(X, y, rows=rows, rng=rng))
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.mean([t.predict_proba(X) for t in self.trees_], axis=0)

    def importances(self) -> np.ndarray:
        gain = np.sum([t.gain_ for t in self.trees_], axis=0)
        total = gain.sum()
        return gain / total if total > 0 else np.full(self.n_features_, 1.0 / self.n_features_)


class GradientBoostedTrees:
    """Additive regression trees on the second-order expansion of logistic loss.

    Each leaf takes weight -G / (H + lambda) from the summed gradients G and
    hessians H of its rows; splits maximize the matching structure gain.
    """

    kind = "gbt"

    def __init__(
        self,
        n_rounds: int = 100,
        max_depth: int = 3,
        learning_rate: float = 0.1,
        lam: float = 1.0,
        min_child_weight: float = 1.0,
        seed: int = 0,
    ):
        self.n_rounds = n_rounds
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.lam = lam
        self.min_child_weight = min_child_weight
        self.seed = seed
        self.single_class = False

    def _score(self, G, H):
        return G * G / (H + self.lam)

    def _grow(self, X, g, h) -> _Tree:
        tree = _Tree()
        rows = np.arange(X.shape[0])
        G, H = float(g.sum()), float(h.sum())
        stack = [(rows, 0, tree.add(-G / (H + self.lam), rows.size, 0.0, 0))]
        while stack:
            idx, depth, node = stack.pop()
            if depth >= self.max_depth or idx.size < 2:
                continue
            G, H = float(g[idx].sum()), float(h[idx].sum())
            parent = self._score(G, H)
            best = None
            best_gain = 1e-12
            for f in range(X.shape[1]):
                x = X[idx, f]
                order = np.argsort(x, kind="stable")
                xs = x[order]
                gl = np.cumsum(g[idx][order])[:-1]
                hl = np.cumsum(h[idx][order])[:-1]
                gain = 0.5 * (self._score(gl, hl) + self._score(G - gl, H - hl) - parent)
                ok = (xs[1:] > xs[:-1]) & (hl >= self.min_child_weight) & (H - hl >= self.min_child_weight)
                gain = np.where(ok, gain, -np.inf)
                i = int(np.argmax(gain))
                if gain[i] > best_gain:
                    best_gain = float(gain[i])
                    best = (f, _threshold(xs, i + 1))
            if best is None:
                continue
            f, thr = best
            mask = X[idx, f] <= thr
            li, ri = idx[mask], idx[~mask]
            tree.feature[node] = f
            tree.threshold[node] = thr
            for side, part in (("left", li), ("right", ri)):
                Gs, Hs = float(g[part].sum()), float(h[part].sum())
                child = tree.add(-Gs / (Hs + self.lam), part.size, 0.0, depth + 1)
                getattr(tree, side)[node] = child
                stack.append((part, depth + 1, child))
            self.gain_[f] += best_gain
        return tree.freeze()

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.n_features_ = X.shape[1]
        self.gain_ = np.zeros(self.n_features_)
        self.single_class = np.unique(y).size < 2
        mean = float(np.clip(y.mean(), 1e-6, 1 - 1e-6))
        self.base_score_ = float(np.log(mean / (1 - mean)))
        self.constant_ = float(y.mean())
        self.trees_ = []
        if self.single_class:
            return self
        F = np.full(X.shape[0], self.base_score_)
        for _ in range(self.n_rounds):
            p = _sigmoid(F)
            tree = self._grow(X, p - y, p * (1 - p))
            self.trees_.append(tree)
            F += self.learning_rate * tree.predict(X)
        return self

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        F = np.full(X.shape[0], self.base_score_)
        for t in self.trees_:
            F += self.learning_rate * t.predict(X)
        return F

    def predict_proba(self, X) -> np.ndarray:
        if self.single_class:
            return np.full(np.asarray(X).shape[0], self.constant_)
        return _sigmoid(self.decision_function(X))

    def importances(self) -> np.ndarray:
        total = self.gain_.sum()
        return self.gain_ / total if total > 0 else np.full(self.n_features_, 1.0 / self.n_features_)
