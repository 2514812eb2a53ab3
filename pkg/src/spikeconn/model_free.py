"""Model-free connectivity scores: lagged correlation and partial correlation.

Two complementary signals are implemented. Directed cross-correlation at a
small lag captures time precedence: score(i -> j) correlates neuron i's
series with neuron j's series shifted one step into the future. Partial
correlation captures conditional dependence through the precision matrix
(inverse covariance), estimated either by truncated eigendecomposition or
by an l1-penalized maximum-likelihood fit (graphical lasso) solved with
blockwise coordinate descent.

Precision estimates are turned into scores by negating, zeroing the
diagonal and min-max normalizing, so strong conditional dependence maps
near 1.
"""

from dataclasses import dataclass, field

import numpy as np

from .dataset import FluorescencePanel, ScoreMatrix
from .preprocess import SpikeRaster

EIGENVALUE_FLOOR = 1e-10


@dataclass
class CovarianceEstimate:
    """Empirical covariance (population normalization) and the sample mean."""

    matrix: np.ndarray
    mean: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("covariance must be square")
        if np.max(np.abs(self.matrix - self.matrix.T)) > 1e-12:
            raise ValueError("covariance must be symmetric")
        if np.diag(self.matrix).min() < 0:
            raise ValueError("variances cannot be negative")


@dataclass
class PrecisionEstimate:
    """Estimated precision matrix with the regularization that produced it."""

    matrix: np.ndarray
    regularization: float
    method: str
    history: list | None = field(default=None, repr=False)


def _series_matrix(data):
    if isinstance(data, SpikeRaster):
        return data.events.astype(np.float64)
    if isinstance(data, FluorescencePanel):
        return data.values
    return np.asarray(data, dtype=np.float64)


def cross_correlation_scores(data, lag=1, method_tag="xcorr"):
    """Directed lag correlation scores.

    For each ordered pair (i, j) the Pearson correlation between series i
    and series j shifted `lag` steps forward is computed over the overlap
    window, with means and variances taken on that window. Zero-variance
    series contribute 0. `lag` may be a single nonnegative integer or an
    iterable of them; multiple lags are averaged before the shared min-max
    normalization maps the matrix into [0, 1] with a zero diagonal.
    """
    series = _series_matrix(data)
    lags = (lag,) if np.isscalar(lag) else tuple(lag)
    if not lags:
        raise ValueError("need at least one lag")
    acc = np.zeros((series.shape[1], series.shape[1]))
    for l in lags:
        acc += lagged_correlation(series, l)
    return ScoreMatrix.from_raw(acc / len(lags), method_tag)


def lagged_correlation(data, lag=1):
    """Raw normalized lag correlation matrix in [-1, 1], no postprocessing."""
    series = _series_matrix(data)
    frames = series.shape[0]
    if lag < 0 or lag >= frames:
        raise ValueError("lag must satisfy 0 <= lag < number of samples")
    x = series[:frames - lag]
    y = series[lag:]
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    sx = np.sqrt((xc * xc).mean(axis=0))
    sy = np.sqrt((yc * yc).mean(axis=0))
    cov = xc.T @ yc / (frames - lag)
    denom = np.outer(sx, sy)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(denom > 0, cov / denom, 0.0)


def empirical_covariance(data):
    """Population covariance S = (1/T) sum_t (a_t - mean)(a_t - mean)^T."""
    series = _series_matrix(data)
    if series.shape[0] < 2:
        raise ValueError("need at least two samples")
    mean = series.mean(axis=0)
    centered = series - mean
    cov = centered.T @ centered / series.shape[0]
    cov = 0.5 * (cov + cov.T)
    return CovarianceEstimate(cov, mean)


def pca_precision(cov, variance_kept=0.80):
    """Precision via truncated eigendecomposition of the covariance.

    Eigenvalues are sorted descending and the smallest k components whose
    cumulative eigenvalue ratio reaches `variance_kept` are retained; the
    precision is the sum of (1/lambda_i) v_i v_i^T over those components,
    skipping eigenvalues below 1e-10.
    """
    if not 0.0 < variance_kept <= 1.0:
        raise ValueError("variance_kept must lie in (0, 1]")
    s = cov.matrix if isinstance(cov, CovarianceEstimate) else np.asarray(cov, float)
    vals, vecs = np.linalg.eigh(s)
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    positive = np.clip(vals, 0.0, None)
    total = positive.sum()
    if total <= 0 or vals.max() < EIGENVALUE_FLOOR:
        raise ValueError("degenerate covariance: all eigenvalues below 1e-10")
    ratios = np.cumsum(positive) / total
    k = min(int(np.searchsorted(ratios, variance_kept)) + 1, len(vals))
    theta = np.zeros_like(s)
    for i in range(k):
        if vals[i] >= EIGENVALUE_FLOOR:
            theta += np.outer(vecs[:, i], vecs[:, i]) / vals[i]
    theta = 0.5 * (theta + theta.T)
    return PrecisionEstimate(theta, 0.0, "pca")


def default_lasso_penalty(cov):
    """Scale-relative default penalty: 5% of the largest off-diagonal."""
    s = cov.matrix if isinstance(cov, CovarianceEstimate) else np.asarray(cov, float)
    off = s - np.diag(np.diag(s))
    return 0.05 * float(np.max(np.abs(off)))


def _lasso_cd(gram, target, beta, penalty, max_pass=1000, tol=1e-12):
    """Cyclic coordinate descent for 0.5 b'Gb - t'b + penalty*|b|_1.

    Warm-started in place; `gram` must have a strictly positive diagonal.
    """
    residual = gram @ beta
    scale = max(float(np.max(np.abs(target))), penalty, 1e-300)
    for _ in range(max_pass):
        largest = 0.0
        for k in range(len(target)):
            if gram[k, k] <= 0:
                continue
            old = beta[k]
            grad = target[k] - (residual[k] - gram[k, k] * old)
            new = np.sign(grad) * max(abs(grad) - penalty, 0.0) / gram[k, k]
            if new != old:
                beta[k] = new
                residual += (new - old) * gram[:, k]
                largest = max(largest, abs(new - old))
        if largest <= tol * scale:
            break
    return beta


def _recover_precision(working, betas):
    n = working.shape[0]
    idx = np.arange(n)
    theta = np.zeros_like(working)
    with np.errstate(divide="ignore", invalid="ignore"):
        for j in range(n):
            mask = idx != j
            beta = betas[mask, j]
            theta[j, j] = 1.0 / (working[j, j] - working[mask, j] @ beta)
            theta[mask, j] = -beta * theta[j, j]
    return 0.5 * (theta + theta.T)


def graphical_lasso(cov, penalty=None, max_sweeps=100, tol=1e-4,
                    keep_history=False):
    """l1-penalized precision estimation by blockwise coordinate descent.

    Each sweep visits every column of the working covariance W once and
    solves the column's lasso subproblem by cyclic coordinate descent; the
    diagonal is never penalized, so with a penalty at or above the largest
    off-diagonal covariance the estimate collapses to diag(1/S_ii), and with
    penalty 0 it converges to the plain inverse. Sweeps stop when the mean
    absolute change of W falls below tol times the mean absolute
    off-diagonal of S. The returned precision is symmetric positive
    definite; if needed a small escalating diagonal ridge is applied to S,
    and failure to reach positive definiteness raises.

    With keep_history=True the per-sweep precision iterates are kept on the
    result's `history` attribute.
    """
    s = cov.matrix if isinstance(cov, CovarianceEstimate) else np.asarray(cov, float)
    s = 0.5 * (s + s.T)
    if penalty is None:
        penalty = default_lasso_penalty(s)
    if penalty < 0:
        raise ValueError("penalty must be nonnegative")
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be at least 1")

    base_ridge = 1e-8 * max(float(np.trace(s)) / len(s), 1.0)
    last_error = None
    for attempt in range(4):
        ridge = 0.0 if attempt == 0 else base_ridge * 100.0 ** (attempt - 1)
        theta, history = _graphical_lasso_once(
            s + ridge * np.eye(len(s)), penalty, max_sweeps, tol, keep_history
        )
        if np.isfinite(theta).all() and np.linalg.eigvalsh(theta).min() > 0:
            return PrecisionEstimate(theta, float(penalty), "glasso",
                                     history if keep_history else None)
        last_error = f"ridge {ridge:g}"
    raise ValueError(
        f"graphical lasso could not reach positive definiteness ({last_error})"
    )


def _graphical_lasso_once(s, penalty, max_sweeps, tol, keep_history):
    n = s.shape[0]
    working = s.copy()
    betas = np.zeros((n, n))
    idx = np.arange(n)
    off = ~np.eye(n, dtype=bool)
    off_scale = float(np.mean(np.abs(s[off]))) or 1.0
    history = []
    for _ in range(max_sweeps):
        previous = working.copy()
        for j in range(n):
            mask = idx != j
            sub = working[np.ix_(mask, mask)]
            beta = _lasso_cd(sub, s[mask, j], betas[mask, j].copy(), penalty)
            betas[mask, j] = beta
            col = sub @ beta
            working[mask, j] = col
            working[j, mask] = col
        if keep_history:
            history.append(_recover_precision(working, betas))
        if np.mean(np.abs(working - previous)) < tol * off_scale:
            break
    theta = history[-1] if history else _recover_precision(working, betas)
    return theta, history


def precision_to_scores(precision, method_tag=None):
    """Negative precision, zero diagonal, min-max normalized to [0, 1]."""
    theta = (precision.matrix if isinstance(precision, PrecisionEstimate)
             else np.asarray(precision, float))
    tag = method_tag if method_tag is not None else getattr(precision, "method", "")
    return ScoreMatrix.from_raw(-theta, tag)
