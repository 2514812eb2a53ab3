"""Ranking metrics over directed pairs and the cross-validation driver.

Both (i, j) and (j, i) enter evaluation as separate pairs because the
ground truth and every scorer are directed. Ties are handled exactly:
ROC-AUC uses midranks (the Mann-Whitney statistic), and the
precision-recall area is average precision with equal scores processed as
one block, so neither metric depends on the order of equal-scored pairs.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import EvalReport


@dataclass
class LabeledScores:
    """Flat (score, label) pairs; labels are binary edge indicators."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.labels = np.asarray(self.labels)
        if self.scores.shape != self.labels.shape or self.scores.ndim != 1:
            raise ValueError("scores and labels must be matching 1-D arrays")
        if len(self.scores) == 0:
            raise ValueError("need at least one pair")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be binary")
        self.labels = self.labels.astype(np.int8)

    @classmethod
    def from_matrices(cls, score_matrix, network):
        """Flatten all off-diagonal ordered pairs of a score matrix against
        the ground-truth adjacency."""
        scores = np.asarray(score_matrix.scores if hasattr(score_matrix, "scores")
                            else score_matrix, dtype=np.float64)
        edges = np.asarray(network.edges if hasattr(network, "edges") else network)
        if scores.shape != edges.shape:
            raise ValueError("score matrix and ground truth sizes differ")
        off = ~np.eye(scores.shape[0], dtype=bool)
        return cls(scores[off], edges[off])


def _midranks(values):
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    boundaries = np.flatnonzero(np.r_[True, sorted_vals[1:] != sorted_vals[:-1], True])
    for lo, hi in zip(boundaries[:-1], boundaries[1:]):
        ranks[order[lo:hi]] = 0.5 * (lo + hi - 1) + 1.0
    return ranks


def roc_auc(labeled):
    """Area under the ROC curve via rank sums.

    Equals the probability that a random positive outranks a random
    negative, counting ties as one half; invariant under strictly
    increasing score transforms. Raises when only one class is present.
    """
    pos = labeled.labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labeled.labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: both classes must be present")
    ranks = _midranks(labeled.scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def pr_auc(labeled):
    """Average precision with tied scores grouped into one block.

    Descending over unique score values, each block contributes its end
    precision times the recall it adds.
    """
    n_pos = int((labeled.labels == 1).sum())
    if n_pos == 0:
        raise ValueError("PR area undefined: need at least one positive")
    order = np.argsort(-labeled.scores, kind="mergesort")
    scores = labeled.scores[order]
    labels = labeled.labels[order]
    area = 0.0
    tp = 0
    seen = 0
    start = 0
    for stop in range(1, len(scores) + 1):
        if stop < len(scores) and scores[stop] == scores[start]:
            continue
        block = labels[start:stop]
        tp_block = int(block.sum())
        seen += stop - start
        tp += tp_block
        if tp_block:
            area += (tp / seen) * (tp_block / n_pos)
        start = stop
    return float(area)


def evaluate_scores(score_matrix, network):
    """(roc_auc, pr_auc) of a score matrix against a ground truth."""
    labeled = LabeledScores.from_matrices(score_matrix, network)
    return roc_auc(labeled), pr_auc(labeled)


def leave_one_network_out(datasets, method, jobs=1):
    """Hold each network out once; score it and compare to its ground truth.

    Supervised methods (method.supervised True) are fitted on the remaining
    networks per fold and need at least two datasets; unsupervised methods
    score each network in isolation, so their per-fold results do not
    depend on which other networks are present. Every dataset must carry a
    ground truth. Reported wall-clock is the mean per-fold scoring time.
    """
    datasets = list(datasets)
    if not datasets:
        raise ValueError("need at least one network")
    supervised = bool(getattr(method, "supervised", False))
    if supervised and len(datasets) < 2:
        raise ValueError("a supervised method needs at least two networks")
    for ds in datasets:
        if ds.ground_truth is None:
            raise ValueError(f"network {ds.network_id!r} has no ground truth")

    def run_fold(k):
        held_out = datasets[k]
        train = [d for i, d in enumerate(datasets) if i != k] if supervised else None
        begin = time.perf_counter()
        scores = method.score(held_out, train)
        elapsed = time.perf_counter() - begin
        auc, prc = evaluate_scores(scores, held_out.ground_truth)
        return (held_out.network_id, auc, prc), elapsed

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_fold, range(len(datasets))))
    else:
        results = [run_fold(k) for k in range(len(datasets))]
    folds = [r[0] for r in results]
    seconds = [r[1] for r in results]
    return EvalReport.from_folds(getattr(method, "name", "method"), folds, seconds)
