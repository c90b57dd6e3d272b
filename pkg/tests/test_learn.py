import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import adjusted_rand, auc_pairs, finite_difference_gradient, gini_weighted, logistic_loss
from teamspectra.analytics import FactorLabel
from teamspectra.errors import KTooLarge
from teamspectra.learn import (
    KINDS,
    Clustering,
    Dataset,
    DecisionTree,
    LogisticRegression,
    SingleClassTrain,
    auc,
    confusion,
    elbow,
    evaluate,
    kmeans,
    label_clusters,
    make_classifier,
    stratified_split,
    train,
)
from teamspectra.learn.metrics import f1_from_confusion

FAST = {"forest": {"n_trees": 15}, "gbt": {"n_rounds": 20}}


def xor_data(n, rng):
    corners = np.array([[-1, -1], [-1, 1], [1, -1], [1, 1]], dtype=float)
    which = rng.integers(0, 4, n)
    X = corners[which] + 0.25 * rng.standard_normal((n, 2))
    y = (which == 1) | (which == 2)
    return X, y.astype(int)


# classifiers


def test_separable_logistic():
    X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    y = np.array([0, 0, 1, 1])
    m = LogisticRegression(ridge=1.0).fit(X, y)
    assert np.all(np.isfinite(m.coef_)) and np.isfinite(m.intercept_)
    assert ((m.predict_proba(X) >= 0.5) == y).all()


def test_xor_tree_beats_logistic():
    tree_acc, lin_acc = [], []
    for seed in range(5):
        r = np.random.default_rng(seed)
        X, y = xor_data(200, r)
        data = Dataset.from_arrays(X, y, seed=seed)
        tree = DecisionTree(max_depth=4, min_leaf=5).fit(data.X_train, data.y_train)
        lin = LogisticRegression().fit(data.X_train, data.y_train)
        tree_acc.append(evaluate(tree, data).accuracy)
        lin_acc.append(evaluate(lin, data).accuracy)
    assert np.mean(tree_acc) > 0.9
    assert abs(np.mean(lin_acc) - 0.5) < 0.15


@pytest.mark.parametrize("kind", KINDS)
def test_single_class_training(kind):
    X = np.random.default_rng(0).standard_normal((50, 2))
    y = np.ones(50, dtype=int)
    data = Dataset(X, y, np.arange(40), np.arange(40, 50))
    with pytest.warns(SingleClassTrain):
        model = train(kind, data, FAST.get(kind))
    assert model.single_class
    assert np.all(model.predict_proba(X) == 1.0)


@pytest.mark.parametrize("kind", KINDS)
def test_importances_signal_beats_noise(kind, rng):
    n = 600
    X = rng.standard_normal((n, 2))
    y = (X[:, 0] + 0.3 * rng.standard_normal(n) > 0).astype(int)
    model = make_classifier(kind, FAST.get(kind)).fit(X, y)
    imp = model.importances()
    assert imp.sum() == pytest.approx(1.0, abs=1e-9)
    assert imp[0] > imp[1]


@pytest.mark.parametrize("kind", KINDS)
def test_single_feature_importance(kind, rng):
    X = rng.standard_normal((200, 1))
    y = (X[:, 0] > 0).astype(int)
    assert make_classifier(kind, FAST.get(kind)).fit(X, y).importances().tolist() == [1.0]


@pytest.mark.parametrize("kind", KINDS)
def test_deterministic_given_seed(kind, rng):
    X, y = xor_data(300, rng)
    a = make_classifier(kind, FAST.get(kind), seed=4).fit(X, y).predict_proba(X)
    b = make_classifier(kind, FAST.get(kind), seed=4).fit(X, y).predict_proba(X)
    assert np.array_equal(a, b)
    assert np.all((a >= 0) & (a <= 1))


def test_cart_splits_decrease_impurity(rng):
    X = rng.standard_normal((400, 3))
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0.5)).astype(int)
    t = DecisionTree(max_depth=5, min_leaf=10).fit(X, y)
    tree = t.tree_

    def rows_of(node):
        leaf_or_node = []
        for i in range(X.shape[0]):
            n = 0
            while True:
                if n == node:
                    leaf_or_node.append(i)
                    break
                if tree.feature_[n] < 0:
                    break
                n = tree.left_[n] if X[i, tree.feature_[n]] <= tree.threshold_[n] else tree.right_[n]
        return np.array(leaf_or_node, dtype=int)

    internal = [n for n in range(len(tree.value)) if tree.feature_[n] >= 0]
    assert internal
    for n in internal:
        parent = rows_of(n)
        left, right = rows_of(tree.left_[n]), rows_of(tree.right_[n])
        assert gini_weighted(y[left]) + gini_weighted(y[right]) < gini_weighted(y[parent])
    for n in range(len(tree.value)):
        if tree.feature_[n] < 0:
            assert tree.n_samples[n] >= 10


# logistic optimization


def test_irls_monotone_and_gradient_check(rng):
    X = rng.standard_normal((150, 3))
    y = (X @ np.array([1.0, -0.5, 0.2]) + rng.logistic(size=150) > 0).astype(int)
    m = LogisticRegression(ridge=0.1).fit(X, y)
    assert np.all(np.diff(m.loglik_history) >= -1e-12)
    assert m.gradient_norm_ <= 1e-6
    w = np.concatenate([[m.intercept_], m.coef_])
    X1 = np.column_stack([np.ones(len(X)), X])
    g = finite_difference_gradient(lambda v: logistic_loss(v, X1, y, 0.1), w)
    assert np.max(np.abs(g)) <= 1e-4


# splits and metrics


def test_stratified_split(rng):
    y = (rng.random(103) < 0.3).astype(int)
    tr, te = stratified_split(y, 0.2, seed=1)
    assert np.intersect1d(tr, te).size == 0
    assert np.union1d(tr, te).size == y.size
    assert set(y[tr]) == {0, 1}
    assert abs(y[te].mean() - y.mean()) < 0.05


def test_perfect_classifier_metrics():
    y = np.array([0, 1, 1, 0, 1])
    cm = confusion(y, y)
    assert np.trace(cm) / cm.sum() == 1.0
    assert f1_from_confusion(cm)[0] == 1.0
    assert auc(y, y.astype(float)) == 1.0


def test_constant_score_auc():
    assert auc([0, 1, 0, 1, 1], np.full(5, 0.3)) == 0.5


def test_confusion_arithmetic():
    y_true = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
    y_pred = np.array([1, 1, 0, 1, 0, 0, 0, 0, 0, 0])
    cm = confusion(y_true, y_pred)
    tn, fp, fn, tp = cm.ravel()
    assert (tp, fp, fn, tn) == (2, 1, 1, 6)
    assert np.trace(cm) / cm.sum() == pytest.approx(0.8)
    assert f1_from_confusion(cm)[0] == pytest.approx(2 / 3)


def test_undefined_f1():
    f1, undefined = f1_from_confusion(confusion([0, 0, 0], [0, 0, 0]))
    assert f1 == 1.0 and undefined


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.integers(0, 6)), min_size=1, max_size=200))
def test_auc_equals_pair_count(rows):
    y = [r[0] for r in rows]
    s = [float(r[1]) for r in rows]
    assert auc(y, s) == pytest.approx(auc_pairs(y, s), abs=1e-12)


# k-means


def test_three_pairs():
    X = np.array([[0, 0], [0, 0.1], [10, 10], [10, 10.1], [-10, 10], [-10, 10.1]])
    c = kmeans(X, 3, seed=0)
    a = c.assignments
    assert a[0] == a[1] and a[2] == a[3] and a[4] == a[5]
    assert len({a[0], a[2], a[4]}) == 3


def test_duplicates_only():
    c = kmeans(np.ones((20, 2)), 1)
    assert c.inertia == 0.0
    with pytest.raises(KTooLarge):
        kmeans(np.ones((20, 2)), 2)


def planted_blobs(n, rng):
    centers = np.array([[0, 0], [6, 0], [0, 6]], dtype=float)
    z = rng.integers(0, 3, n)
    return centers[z] + rng.standard_normal((n, 2)), z


def test_ari_on_planted_mixture(rng):
    X, z = planted_blobs(3000, rng)
    c = kmeans(X, 3, seed=1)
    assert adjusted_rand(c.assignments, z) >= 0.9


def test_inertia_history_non_increasing(rng):
    X, _ = planted_blobs(500, rng)
    c = kmeans(X, 4, seed=2, n_init=1)
    assert np.all(np.diff(c.inertia_history) <= 1e-9)
    assert c.inertia == pytest.approx(((X - c.centroids[c.assignments]) ** 2).sum())
    d = ((X[:, None, :] - c.centroids[None]) ** 2).sum(axis=2)
    assert np.all(d[np.arange(len(X)), c.assignments] <= d.min(axis=1) + 1e-9)


def test_row_order_invariance(rng):
    X, _ = planted_blobs(300, rng)
    perm = rng.permutation(300)
    a = kmeans(X, 3, seed=5)
    b = kmeans(X[perm], 3, seed=5)
    assert np.array_equal(a.centroids, b.centroids)
    assert np.array_equal(a.assignments[perm], b.assignments)


def test_elbow_planted_three(rng):
    X, _ = planted_blobs(900, rng)
    r = elbow(X, k_max=8, seed=0)
    assert r.k == 3 and not r.flat


def test_elbow_single_cloud(rng):
    r = elbow(rng.standard_normal((600, 2)), k_max=8, seed=0)
    assert r.k in (1, 2) and r.flat


def test_elbow_identical_rows():
    assert elbow(np.zeros((30, 2)), k_max=5).k == 1


def test_label_clusters_rule():
    C = np.array([[2.0, 0.0], [0.0, 2.0], [0.0, 0.0]])
    c = Clustering(3, C, np.array([0, 1, 2, 2]), 0.0)
    axes = {FactorLabel.Acquiring: 0, FactorLabel.Sharing: 1}
    labeled = label_clusters(c, axes, "individual")
    assert [x.value for x in labeled.labels] == ["acquiring", "sharing", "average"]
    # permuting centroids permutes labels
    p = [2, 0, 1]
    labeled = label_clusters(Clustering(3, C[p], np.array([0, 1, 2]), 0.0), axes, "individual")
    assert [x.value for x in labeled.labels] == ["average", "acquiring", "sharing"]


def test_label_clusters_collective():
    C = np.array([[1.5, -1.0], [-1.2, 1.4], [0.0, 0.1]])
    axes = {FactorLabel.Cooperative: 0, FactorLabel.NonCooperative: 1}
    labeled = label_clusters(Clustering(3, C, np.array([0, 1, 2]), 0.0), axes, "collective")
    assert [x.value for x in labeled.labels] == ["cooperative", "non_cooperative", "average"]


def test_train_runs_every_kind(rng):
    X, y = xor_data(300, rng)
    data = Dataset.from_arrays(X, y, seed=0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for kind in KINDS:
            r = evaluate(train(kind, data, FAST.get(kind)), data)
            assert 0 <= r.auc <= 1 and r.confusion.sum() == data.test.size
