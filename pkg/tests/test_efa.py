import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import best_congruence, planted_factor_data
from teamspectra.analytics import (
    COLLECTIVE_COLUMNS,
    INDIVIDUAL_COLUMNS,
    FactorLabel,
    FactorModel,
    NonConvergenceWarning,
    efa,
    label_factors,
    scree_elbow,
)
from teamspectra.errors import AmbiguousPattern, NonConvergence

# two indicators on the second factor make principal-axis iteration converge
# slowly (several hundred rounds), hence the raised cap below
MAX_ITER = 2000
PLANTED = np.array([[0.8, 0.05], [0.75, 0.1], [0.7, 0.0], [0.05, 0.8], [0.1, 0.7]])


@pytest.fixture(scope="module")
def planted():
    return planted_factor_data(10_000, PLANTED, np.random.default_rng(2024))


def test_planted_recovery(planted):
    m = efa(planted, n_factors=2, rotation="varimax", max_iter=MAX_ITER)
    assert min(best_congruence(m.loadings, PLANTED)) >= 0.95
    assert m.converged


def test_scree_auto_picks_two(planted):
    assert efa(planted, rotation="varimax", max_iter=MAX_ITER).n_factors == 2


def test_scree_elbow_examples():
    assert scree_elbow([2.0, 1.5, 0.6, 0.5, 0.4]) == 2
    assert scree_elbow([3.0, 0.5, 0.4, 0.3, 0.2]) == 1


def test_loadings_bounded_and_scores_centred(planted):
    m = efa(planted, n_factors=2, max_iter=MAX_ITER)
    assert np.all(np.abs(m.loadings) <= 1 + 1e-6)
    assert np.allclose(m.scores.mean(axis=0), 0.0, atol=1e-10)


def test_reconstruction_error_decreases(planted):
    m = efa(planted, n_factors=2, tol=1e-9, max_iter=MAX_ITER, strict=False)
    errs = np.array(m.reconstruction_errors)
    assert errs.size > 2
    assert np.all(np.diff(errs) <= 1e-12)


def test_sign_convention(planted):
    m = efa(planted, n_factors=2, max_iter=MAX_ITER)
    for f in range(2):
        col = m.loadings[:, f]
        assert col[np.argmax(np.abs(col))] > 0


@pytest.mark.filterwarnings("ignore::teamspectra.analytics.NonConvergenceWarning")
@settings(max_examples=15, deadline=None)
@given(st.lists(st.sampled_from([-1.0, 1.0]), min_size=5, max_size=5))
def test_column_sign_flip_equivariance(signs):
    # the iteration itself is equivariant, so a fixed round count suffices
    X = planted_factor_data(2000, PLANTED, np.random.default_rng(5))
    s = np.array(signs)
    a = efa(X, n_factors=2, sign_convention=False, max_iter=100, strict=False)
    b = efa(X * s, n_factors=2, sign_convention=False, max_iter=100, strict=False)
    assert np.allclose(a.communalities, b.communalities, atol=1e-8)
    flipped = b.loadings * s[:, None]
    for f in range(2):
        assert np.allclose(flipped[:, f], a.loadings[:, f], atol=1e-8) or np.allclose(
            flipped[:, f], -a.loadings[:, f], atol=1e-8
        )


def test_non_convergence_strict_and_lenient(planted):
    with pytest.raises(NonConvergence):
        efa(planted, n_factors=2, max_iter=2, tol=1e-14)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        m = efa(planted, n_factors=2, max_iter=2, tol=1e-14, strict=False)
    assert not m.converged
    assert any(issubclass(w.category, NonConvergenceWarning) for w in caught)


def test_rejects_bad_factor_count(planted):
    with pytest.raises(ValueError):
        efa(planted, n_factors=5)


# labeling


def _model(L, names):
    L = np.asarray(L, dtype=float)
    return FactorModel(
        loadings=L,
        eigenvalues=np.ones(len(names)),
        communalities=(L**2).sum(axis=1),
        scores=np.zeros((3, 2)),
        n_factors=2,
        feature_names=tuple(names),
    )


# columns: vision, gold, xp, in-degree, out-degree
INDIVIDUAL_PATTERN = [[0.15, 0.62], [0.93, 0.11], [0.88, 0.05], [0.41, 0.33], [0.07, 0.71]]
# columns: avg gold, avg vision, avg xp, C_I, C_O, EGR
COLLECTIVE_PATTERN = [[-0.95, 0.1], [-0.6, 0.2], [-0.9, 0.05], [0.12, 0.45], [0.05, 0.6], [0.3, 0.5]]


def test_individual_labels():
    m = label_factors(_model(INDIVIDUAL_PATTERN, INDIVIDUAL_COLUMNS), "individual")
    assert m.factor_labels == (FactorLabel.Acquiring, FactorLabel.Sharing)


def test_collective_labels_and_orientation():
    m = label_factors(_model(COLLECTIVE_PATTERN, COLLECTIVE_COLUMNS), "collective")
    assert m.factor_labels == (FactorLabel.Cooperative, FactorLabel.NonCooperative)
    # high Cooperative score means more gold
    assert m.loadings[0, 0] > 0


def test_swapped_columns_swap_labels():
    L = np.asarray(INDIVIDUAL_PATTERN)[:, ::-1]
    m = label_factors(_model(L, INDIVIDUAL_COLUMNS), "individual")
    assert m.factor_labels == (FactorLabel.Sharing, FactorLabel.Acquiring)
    L = np.asarray(COLLECTIVE_PATTERN)[:, ::-1]
    m = label_factors(_model(L, COLLECTIVE_COLUMNS), "collective")
    assert m.factor_labels == (FactorLabel.NonCooperative, FactorLabel.Cooperative)


def test_ambiguous_pattern():
    # one factor dominates gold and the sharing columns alike
    L = [[0.9, 0.1], [0.9, 0.1], [0.5, 0.3], [0.4, 0.2], [0.9, 0.1]]
    with pytest.raises(AmbiguousPattern):
        label_factors(_model(L, INDIVIDUAL_COLUMNS), "individual")
