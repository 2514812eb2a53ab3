import numpy as np
import pytest

from oracles import penalized_likelihood_objective as penalized_objective
from oracles import random_pd_matrix as random_pd
from spikeconn.dataset import ScoreMatrix
from spikeconn.model_free import (
    CovarianceEstimate,
    cross_correlation_scores,
    default_lasso_penalty,
    empirical_covariance,
    graphical_lasso,
    lagged_correlation,
    pca_precision,
    precision_to_scores,
)


# ---------------------------------------------------------------------------
# cross-correlation
# ---------------------------------------------------------------------------

def test_lagged_self_correlation_is_one():
    x = np.array([1.0, 0.0, 2.0, 1.0, 0.0])
    series = np.column_stack([x, x])
    corr = lagged_correlation(series, lag=0)
    assert corr[0, 1] == pytest.approx(1.0)


def test_constant_series_yield_zero():
    series = np.column_stack([np.ones(6), [1.0, 0, 1, 0, 1, 0]])
    corr = lagged_correlation(series, lag=1)
    assert corr[0, 1] == 0.0
    assert corr[1, 0] == 0.0


def test_hand_computed_lag_one_value():
    x = np.array([1.0, 0.0, 0.0, 1.0, 0.0])
    y = np.array([0.0, 1.0, 0.0, 0.0, 1.0])
    corr = lagged_correlation(np.column_stack([x, y]), lag=1)
    # overlap windows [1,0,0,1] vs [1,0,0,1]: sum 1.0 over L*sx*sy = 1.0
    assert corr[0, 1] == pytest.approx(1.0)


def test_cross_correlation_scores_contract(rng):
    events = (rng.random((120, 6)) < 0.2).astype(float)
    sm = cross_correlation_scores(events, lag=1)
    assert isinstance(sm, ScoreMatrix)
    assert np.diag(sm.scores).sum() == 0.0
    assert sm.scores.min() >= 0.0 and sm.scores.max() <= 1.0


def test_cross_correlation_lag_validation():
    events = np.zeros((3, 2))
    with pytest.raises(ValueError):
        cross_correlation_scores(events, lag=3)
    with pytest.raises(ValueError):
        cross_correlation_scores(events, lag=-1)


def test_rank_invariance_under_positive_affine_rescale(rng):
    series = rng.normal(0, 1, (300, 7))
    slopes = rng.uniform(0.5, 3.0, 7)
    offsets = rng.normal(0, 2, 7)
    rescaled = series * slopes + offsets
    a = cross_correlation_scores(series, lag=1).scores
    b = cross_correlation_scores(rescaled, lag=1).scores
    off = ~np.eye(7, dtype=bool)
    order_a = np.argsort(a[off], kind="mergesort")
    order_b = np.argsort(b[off], kind="mergesort")
    assert np.array_equal(order_a, order_b)


def test_lag_set_averaging(rng):
    series = rng.normal(0, 1, (100, 4))
    single = cross_correlation_scores(series, lag=1)
    multi = cross_correlation_scores(series, lag=(1,))
    assert np.allclose(single.scores, multi.scores)


# ---------------------------------------------------------------------------
# covariance and pca precision
# ---------------------------------------------------------------------------

def test_covariance_hand_example():
    cov = empirical_covariance(np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]))
    assert np.allclose(cov.matrix, [[2 / 3, 4 / 3], [4 / 3, 8 / 3]])


def test_covariance_identical_columns():
    x = np.array([[1.0, 1.0], [0.0, 0.0], [2.0, 2.0]])
    cov = empirical_covariance(x)
    assert cov.matrix[0, 0] == pytest.approx(cov.matrix[0, 1])


def test_covariance_uncorrelated_columns():
    x = np.column_stack([[1.0, -1.0, 1.0, -1.0], np.ones(4)])
    cov = empirical_covariance(x)
    assert cov.matrix[0, 1] == pytest.approx(0.0)


def test_pca_identity_covariance():
    cov = CovarianceEstimate(np.eye(3), np.zeros(3))
    prec = pca_precision(cov)
    assert np.allclose(prec.matrix, np.eye(3))


def test_pca_keeps_both_when_first_insufficient():
    cov = CovarianceEstimate(np.diag([2.0, 1.0]), np.zeros(2))
    prec = pca_precision(cov, variance_kept=0.80)
    assert np.allclose(prec.matrix, np.diag([0.5, 1.0]))


def test_pca_truncates_to_leading_component():
    cov = CovarianceEstimate(np.array([[1.0, 0.9], [0.9, 1.0]]), np.zeros(2))
    prec = pca_precision(cov, variance_kept=0.80)
    assert np.allclose(prec.matrix, np.full((2, 2), 1.0 / (2 * 1.9)))
    assert prec.matrix[0, 0] == pytest.approx(0.2632, abs=5e-5)


def test_pca_full_variance_matches_inverse(rng):
    for _ in range(10):
        n = int(rng.integers(2, 8))
        s = random_pd(rng, n)
        prec = pca_precision(CovarianceEstimate(s, np.zeros(n)), variance_kept=1.0)
        assert np.abs(prec.matrix - np.linalg.inv(s)).max() <= 1e-8


def test_pca_degenerate_covariance_raises():
    cov = CovarianceEstimate(np.zeros((3, 3)), np.zeros(3))
    with pytest.raises(ValueError, match="degenerate"):
        pca_precision(cov)


# ---------------------------------------------------------------------------
# graphical lasso
# ---------------------------------------------------------------------------

def test_glasso_zero_penalty_analytic_2x2():
    s = np.array([[2.0, 1.0], [1.0, 2.0]])
    prec = graphical_lasso(CovarianceEstimate(s, np.zeros(2)), penalty=0.0)
    expected = np.array([[2 / 3, -1 / 3], [-1 / 3, 2 / 3]])
    assert np.abs(prec.matrix - expected).max() <= 1e-6


def test_glasso_zero_penalty_matches_inversion(rng):
    for _ in range(15):
        n = int(rng.integers(2, 11))
        s = random_pd(rng, n)
        prec = graphical_lasso(CovarianceEstimate(s, np.zeros(n)), penalty=0.0)
        assert np.abs(prec.matrix - np.linalg.inv(s)).max() <= 1e-6


def test_glasso_full_shrinkage_fixture(rng):
    for _ in range(5):
        n = int(rng.integers(2, 7))
        s = random_pd(rng, n)
        off = np.abs(s - np.diag(np.diag(s))).max()
        prec = graphical_lasso(CovarianceEstimate(s, np.zeros(n)), penalty=off * 1.01)
        expected = np.diag(1.0 / np.diag(s))
        assert np.abs(prec.matrix - expected).max() <= 1e-8


def test_glasso_objective_nondecreasing_across_sweeps(rng):
    for _ in range(20):
        n = int(rng.integers(4, 10))
        s = random_pd(rng, n)
        penalty = 0.1 * np.abs(s - np.diag(np.diag(s))).max()
        prec = graphical_lasso(CovarianceEstimate(s, np.zeros(n)), penalty,
                               keep_history=True)
        objectives = [penalized_objective(s, theta, penalty) for theta in prec.history]
        assert (np.diff(objectives) >= -1e-9).all()


def test_glasso_sparsity_monotone_in_penalty(rng):
    s = random_pd(rng, 8)
    grid = np.linspace(0.0, np.abs(s - np.diag(np.diag(s))).max(), 8)
    counts = []
    for penalty in grid:
        prec = graphical_lasso(CovarianceEstimate(s, np.zeros(8)), float(penalty))
        off = ~np.eye(8, dtype=bool)
        counts.append(int((np.abs(prec.matrix[off]) > 1e-8).sum()))
    assert (np.diff(counts) <= 0).all()


def test_glasso_output_positive_definite(rng):
    for _ in range(10):
        s = random_pd(rng, 6)
        prec = graphical_lasso(CovarianceEstimate(s, np.zeros(6)),
                               default_lasso_penalty(s))
        assert np.linalg.eigvalsh(prec.matrix).min() > 0
        assert np.abs(prec.matrix - prec.matrix.T).max() <= 1e-12


def test_glasso_rejects_negative_penalty():
    with pytest.raises(ValueError):
        graphical_lasso(CovarianceEstimate(np.eye(2), np.zeros(2)), penalty=-0.1)


def test_default_penalty_is_scale_relative():
    s = np.array([[2.0, 0.4], [0.4, 1.0]])
    assert default_lasso_penalty(s) == pytest.approx(0.02)


# ---------------------------------------------------------------------------
# negative-precision postprocessing
# ---------------------------------------------------------------------------

def test_precision_scores_all_equal_offdiagonal():
    theta = np.array([[2.0, -0.5], [-0.5, 2.0]])
    sm = precision_to_scores(theta)
    assert np.array_equal(sm.scores, np.zeros((2, 2)))


def test_minmax_hand_example():
    # off-diagonal values negate to {0.4, 0.2, -0.1, -0.3}
    raw = np.array([
        [9.0, 0.4, 0.2],
        [0.4, 9.0, -0.1],
        [-0.3, -0.3, 9.0],
    ])
    sm = ScoreMatrix.from_raw(raw)
    assert sm.scores[0, 1] == pytest.approx(1.0)
    assert sm.scores[0, 2] == pytest.approx(0.714285714, abs=1e-6)
    assert sm.scores[1, 2] == pytest.approx(0.285714285, abs=1e-6)
    assert sm.scores[2, 0] == pytest.approx(0.0)


def test_precision_scores_contract(rng):
    for _ in range(10):
        theta = rng.normal(0, 1, (5, 5))
        theta = 0.5 * (theta + theta.T)
        sm = precision_to_scores(theta)
        assert np.diag(sm.scores).sum() == 0.0
        assert sm.scores.min() >= 0.0 and sm.scores.max() <= 1.0
