"""Influence-span features and a class-weighted RBF SVM over directed pairs.

The supervised scorer treats connectivity like influence estimation in an
event cascade: if neuron i drives neuron j, then j's first spike after
each spike of i tends to follow quickly and consistently. The pipeline:

1. zero frames where over 70% of the network spikes (noisy bursts),
2. for every spike s of a source neuron, take each other neuron's
   immediate next spike as a candidate response,
3. discard candidates falling within a refractory second of a spike that
   precedes s on the same source (they are better explained by the earlier
   spike),
4. collect the response delays per ordered pair,
5. map each delay x to exp(1/x) - 1 (clamped below at 0.1 s so the score
   tops out at exp(10) - 1), rewarding tight timing,
6. summarize each pair by impulse count, mean, population variance and
   nearest-rank 95th percentile of the scores,
7. train an RBF-kernel SVM with class weights balancing the ~10% edge
   prevalence, and score test pairs by their decision values.

The SVM solves the soft-margin dual with sequential minimal optimization
using maximal-violating-pair selection, which is deterministic given the
input order.
"""

from dataclasses import dataclass

import numpy as np

from .dataset import ScoreMatrix
from .preprocess import remove_high_activity_frames

SPAN_CLAMP_FLOOR_S = 0.1
REFRACTORY_S = 1.0


@dataclass
class SpanSeries:
    """Response delays (seconds) from one source neuron to one target."""

    source: int
    target: int
    spans_s: np.ndarray

    def __post_init__(self):
        self.spans_s = np.asarray(self.spans_s, dtype=np.float64)
        if len(self.spans_s) and self.spans_s.min() <= 0:
            raise ValueError("spans must be strictly positive")


@dataclass
class PairFeatureVector:
    impulse_count: int
    mean_score: float
    var_score: float
    p95_score: float

    def as_array(self):
        return np.array([self.impulse_count, self.mean_score,
                         self.var_score, self.p95_score], dtype=np.float64)


def extract_span_series(raster, refractory_s=REFRACTORY_S, refractory_scope="source"):
    """Candidate impulse-response delays for every ordered neuron pair.

    For each spike of neuron i at time t, the earliest spike of neuron j
    strictly after t is a candidate response; the candidate is dropped when
    it lies within `refractory_s` of a spike preceding t. With the default
    scope "source" only earlier spikes of neuron i disqualify a candidate;
    scope "any" considers earlier spikes of every neuron.

    Returns a dict mapping (source, target) to a SpanSeries; pairs with no
    surviving candidate get an empty series.
    """
    if refractory_scope not in ("source", "any"):
        raise ValueError("refractory_scope must be 'source' or 'any'")
    times = raster.spike_times
    n = raster.neuron_count
    merged = np.sort(np.concatenate(times)) if refractory_scope == "any" else None
    series = {}
    for i in range(n):
        ti = times[i]
        if refractory_scope == "source":
            prev = np.full(len(ti), -np.inf)
            if len(ti) > 1:
                prev[1:] = ti[:-1]
        elif len(ti):
            pos = np.searchsorted(merged, ti, side="left")
            prev = np.where(pos > 0, merged[np.maximum(pos - 1, 0)], -np.inf)
        else:
            prev = np.zeros(0)
        for j in range(n):
            if i == j:
                continue
            tj = times[j]
            if len(ti) == 0 or len(tj) == 0:
                series[(i, j)] = SpanSeries(i, j, np.zeros(0))
                continue
            nxt = np.searchsorted(tj, ti, side="right")
            has_next = nxt < len(tj)
            candidate = np.where(has_next, tj[np.minimum(nxt, len(tj) - 1)], np.inf)
            keep = has_next & (candidate - prev >= refractory_s)
            series[(i, j)] = SpanSeries(i, j, (candidate - ti)[keep])
    return series


def transform_and_featurize(span_series, clamp_floor_s=SPAN_CLAMP_FLOOR_S):
    """Score spans with exp(1/x) - 1 after clamping, then summarize.

    The transform decreases strictly in the span, so close responses score
    high; features are the impulse count, mean, population variance and
    nearest-rank 95th percentile of the score series. An empty series maps
    to the all-zero vector.
    """
    spans = span_series.spans_s if isinstance(span_series, SpanSeries) else np.asarray(span_series, float)
    if len(spans) == 0:
        return PairFeatureVector(0, 0.0, 0.0, 0.0)
    scores = np.expm1(1.0 / np.maximum(spans, clamp_floor_s))
    rank = int(np.ceil(0.95 * len(scores)))
    p95 = float(np.sort(scores)[rank - 1])
    return PairFeatureVector(len(scores), float(scores.mean()),
                             float(scores.var()), p95)


def pair_feature_matrix(raster, refractory_s=REFRACTORY_S,
                        clamp_floor_s=SPAN_CLAMP_FLOOR_S, activity_fraction=0.7):
    """Steps 1-6 for a whole raster: (P x 4 feature matrix, ordered pairs)."""
    filtered = remove_high_activity_frames(raster, activity_fraction)
    spans = extract_span_series(filtered, refractory_s)
    pairs = [(i, j) for i in range(raster.neuron_count)
             for j in range(raster.neuron_count) if i != j]
    rows = [transform_and_featurize(spans[p], clamp_floor_s).as_array() for p in pairs]
    return np.array(rows), pairs


# ---------------------------------------------------------------------------
# support vector machine (sequential minimal optimization)
# ---------------------------------------------------------------------------

class SvmModel:
    """RBF-kernel soft-margin SVM trained by SMO.

    Features are standardized internally with train-set statistics, which
    the model stores and reapplies at prediction time. Class weights scale
    the per-sample box constraint C, with "balanced" weighting inversely
    proportional to class frequency.
    """

    def __init__(self, C=1.0, gamma=None, class_weight="balanced", tol=1e-3,
                 max_iter=1_000_000):
        self.C = C
        self.gamma = gamma
        self.class_weight = class_weight
        self.tol = tol
        self.max_iter = max_iter

    def _class_weights(self, labels):
        n = len(labels)
        pos = int((labels > 0).sum())
        neg = n - pos
        if self.class_weight == "balanced":
            return {1: n / (2.0 * pos), -1: n / (2.0 * neg)}
        if self.class_weight is None:
            return {1: 1.0, -1: 1.0}
        return dict(self.class_weight)

    def _rbf(self, a, b):
        sq = ((a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :]
              - 2.0 * a @ b.T)
        return np.exp(-self.gamma_ * np.maximum(sq, 0.0))

    def fit(self, features, labels):
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.float64)
        if features.ndim != 2 or len(features) != len(labels):
            raise ValueError("features must be rows matching the labels")
        if not np.isfinite(features).all():
            raise ValueError("features must be finite")
        if not np.isin(labels, (-1.0, 1.0)).all():
            raise ValueError("labels must be -1 or +1")
        if len(np.unique(labels)) < 2:
            raise ValueError("training needs at least one example per class")

        self.mean_ = features.mean(axis=0)
        sd = features.std(axis=0)
        sd[sd == 0] = 1.0
        self.scale_ = sd
        x = (features - self.mean_) / self.scale_
        if self.gamma is None:
            var = x.var()
            self.gamma_ = 1.0 / (x.shape[1] * var) if var > 0 else 1.0 / x.shape[1]
        else:
            self.gamma_ = float(self.gamma)

        weights = self._class_weights(labels)
        self.class_weights_ = weights
        box = np.where(labels > 0, self.C * weights[1], self.C * weights[-1])
        kernel = self._rbf(x, x)
        n = len(labels)
        alpha = np.zeros(n)
        grad = -np.ones(n)  # gradient of 0.5 a'Qa - e'a with Q = yy' * K
        pos = labels > 0

        for iteration in range(self.max_iter):
            crit = -labels * grad
            in_up = (pos & (alpha < box)) | (~pos & (alpha > 0))
            in_low = (~pos & (alpha < box)) | (pos & (alpha > 0))
            if not in_up.any() or not in_low.any():
                break
            up_idx = np.flatnonzero(in_up)
            low_idx = np.flatnonzero(in_low)
            i = up_idx[np.argmax(crit[up_idx])]
            j = low_idx[np.argmin(crit[low_idx])]
            gap = crit[i] - crit[j]
            if gap < self.tol:
                break
            curve = kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j]
            step = gap / max(curve, 1e-12)
            step = min(step, box[i] - alpha[i] if labels[i] > 0 else alpha[i])
            step = min(step, alpha[j] if labels[j] > 0 else box[j] - alpha[j])
            alpha[i] += labels[i] * step
            alpha[j] -= labels[j] * step
            grad += step * labels * (kernel[:, i] - kernel[:, j])

        crit = -labels * grad
        in_up = (pos & (alpha < box)) | (~pos & (alpha > 0))
        in_low = (~pos & (alpha < box)) | (pos & (alpha > 0))
        hi = crit[in_up].max() if in_up.any() else 0.0
        lo = crit[in_low].min() if in_low.any() else 0.0
        self.bias_ = float(hi + lo) / 2.0
        self.kkt_gap_ = float(hi - lo)
        self.alpha_ = alpha
        self.labels_ = labels
        keep = alpha > 1e-12
        self.support_vectors_ = x[keep]
        self.dual_coef_ = (alpha * labels)[keep]
        self.box_ = box
        self.n_features_ = x.shape[1]
        return self

    def decision_values(self, features):
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} feature columns")
        x = (features - self.mean_) / self.scale_
        if len(self.support_vectors_) == 0:
            return np.full(len(x), self.bias_)
        return self._rbf(x, self.support_vectors_) @ self.dual_coef_ + self.bias_


def svm_train(features, labels, C=1.0, gamma=None, class_weight="balanced",
              tol=1e-3):
    return SvmModel(C=C, gamma=gamma, class_weight=class_weight, tol=tol).fit(
        features, labels
    )


def svm_predict(model, features):
    return model.decision_values(features)


def cirusim_scores(train_sets, test_raster, refractory_s=REFRACTORY_S,
                   clamp_floor_s=SPAN_CLAMP_FLOOR_S, activity_fraction=0.7,
                   C=1.0, gamma=None, tol=1e-3, method_tag="cirusim"):
    """Supervised pair scores for a test raster.

    `train_sets` is a sequence of (SpikeRaster, GroundTruthNetwork) pairs;
    features are extracted per directed pair on every network, the SVM is
    trained on the labeled training pairs, and test-pair decision values
    are min-max normalized into a ScoreMatrix.
    """
    if not train_sets:
        raise ValueError("at least one training network with ground truth is required")
    rows, labels = [], []
    for raster, truth in train_sets:
        feats, pairs = pair_feature_matrix(raster, refractory_s, clamp_floor_s,
                                           activity_fraction)
        rows.append(feats)
        labels.append(np.array([1.0 if truth.edges[i, j] else -1.0
                                for i, j in pairs]))
    model = svm_train(np.vstack(rows), np.concatenate(labels), C=C, gamma=gamma,
                      tol=tol)
    feats, pairs = pair_feature_matrix(test_raster, refractory_s, clamp_floor_s,
                                       activity_fraction)
    decisions = svm_predict(model, feats)
    n = test_raster.neuron_count
    raw = np.zeros((n, n))
    for value, (i, j) in zip(decisions, pairs):
        raw[i, j] = value
    return ScoreMatrix.from_raw(raw, method_tag)
