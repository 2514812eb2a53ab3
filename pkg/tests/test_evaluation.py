import numpy as np
import pytest

from oracles import brute_force_ap, brute_force_roc, random_labeled_instance
from spikeconn.dataset import GroundTruthNetwork, ScoreMatrix
from spikeconn.evaluation import (
    LabeledScores,
    evaluate_scores,
    leave_one_network_out,
    pr_auc,
    roc_auc,
)


def random_instance(rng):
    return random_labeled_instance(rng)


# ---------------------------------------------------------------------------
# roc auc
# ---------------------------------------------------------------------------

def test_roc_perfect_ranking():
    ls = LabeledScores([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert roc_auc(ls) == 1.0


def test_roc_all_ties_is_half():
    ls = LabeledScores([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0])
    assert roc_auc(ls) == 0.5


def test_roc_hand_example():
    ls = LabeledScores([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0])
    assert roc_auc(ls) == pytest.approx(0.75)


def test_roc_single_class_raises():
    with pytest.raises(ValueError, match="AUC undefined"):
        roc_auc(LabeledScores([0.2, 0.4], [1, 1]))


def test_roc_matches_brute_force_oracle(rng):
    for _ in range(200):
        scores, labels = random_instance(rng)
        ls = LabeledScores(scores, labels)
        assert abs(roc_auc(ls) - brute_force_roc(scores, labels)) <= 1e-12


def test_roc_invariant_under_increasing_transform(rng):
    for _ in range(20):
        scores, labels = random_instance(rng)
        warped = np.exp(3.0 * scores) + 1.0
        a = roc_auc(LabeledScores(scores, labels))
        b = roc_auc(LabeledScores(warped / warped.max(), labels))
        assert a == pytest.approx(b, abs=1e-12)


def test_roc_complementation(rng):
    for _ in range(50):
        scores, labels = random_instance(rng)
        a = roc_auc(LabeledScores(scores, labels))
        b = roc_auc(LabeledScores(scores, 1 - labels))
        assert a + b == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# pr auc
# ---------------------------------------------------------------------------

def test_pr_perfect_ranking():
    ls = LabeledScores([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert pr_auc(ls) == 1.0


def test_pr_all_ties_equals_prevalence():
    ls = LabeledScores([0.3] * 10, [1, 0, 0, 0, 1, 0, 0, 0, 0, 0])
    assert pr_auc(ls) == pytest.approx(0.2)


def test_pr_hand_example():
    ls = LabeledScores([0.9, 0.8, 0.7], [1, 0, 1])
    assert pr_auc(ls) == pytest.approx((1.0 * 0.5) + (2.0 / 3.0) * 0.5)


def test_pr_zero_positives_raises():
    with pytest.raises(ValueError):
        pr_auc(LabeledScores([0.2, 0.4], [0, 0]))


def test_pr_matches_brute_force_oracle(rng):
    for _ in range(200):
        scores, labels = random_instance(rng)
        ls = LabeledScores(scores, labels)
        assert abs(pr_auc(ls) - brute_force_ap(scores, labels)) <= 1e-12


# ---------------------------------------------------------------------------
# flattening + leave-one-network-out
# ---------------------------------------------------------------------------

def test_from_matrices_uses_offdiagonal_pairs():
    scores = ScoreMatrix([[0.0, 0.9], [0.1, 0.0]])
    truth = GroundTruthNetwork([[0, 1], [0, 0]])
    ls = LabeledScores.from_matrices(scores, truth)
    assert len(ls.scores) == 2
    assert roc_auc(ls) == 1.0


class OracleMethod:
    """Emits the ground truth itself: the AUC/PRC upper bound."""

    name = "oracle"
    supervised = False

    def score(self, test, train=None):
        return ScoreMatrix(test.ground_truth.edges.astype(float), self.name)


class RecordingMethod:
    name = "recorder"
    supervised = True

    def __init__(self):
        self.calls = []

    def score(self, test, train=None):
        self.calls.append((test.network_id, tuple(d.network_id for d in train)))
        return ScoreMatrix(test.ground_truth.edges.astype(float), self.name)


def test_lono_oracle_method_scores_one(bundles):
    report = leave_one_network_out(bundles, OracleMethod())
    assert len(report.per_fold) == len(bundles)
    for _, auc, prc in report.per_fold:
        assert auc == 1.0
        assert prc == 1.0


def test_lono_each_network_held_out_once(bundles):
    method = RecordingMethod()
    leave_one_network_out(bundles, method)
    held = [c[0] for c in method.calls]
    assert held == [b.network_id for b in bundles]
    for held_id, train_ids in method.calls:
        assert held_id not in train_ids
        assert len(train_ids) == len(bundles) - 1


def test_lono_unsupervised_independent_of_other_networks(bundles):
    class Probe:
        name = "probe"
        supervised = False

        def score(self, test, train=None):
            assert train is None
            raw = np.outer(test.ground_truth.edges.sum(axis=1) + 1.0,
                           np.ones(test.ground_truth.neuron_count))
            np.fill_diagonal(raw, 0.0)
            return ScoreMatrix.from_raw(raw, self.name)

    full = leave_one_network_out(bundles, Probe())
    solo = leave_one_network_out(bundles[:1], Probe())
    assert full.per_fold[0][1] == solo.per_fold[0][1]
    assert full.per_fold[0][2] == solo.per_fold[0][2]


def test_lono_supervised_needs_two_networks(bundles):
    with pytest.raises(ValueError, match="two networks"):
        leave_one_network_out(bundles[:1], RecordingMethod())


def test_lono_requires_ground_truth(bundles):
    import copy

    broken = copy.copy(bundles[0])
    broken.ground_truth = None
    with pytest.raises(ValueError, match="ground truth"):
        leave_one_network_out([broken], OracleMethod())


def test_lono_parallel_matches_sequential(bundles):
    seq = leave_one_network_out(bundles, OracleMethod(), jobs=1)
    par = leave_one_network_out(bundles, OracleMethod(), jobs=3)
    assert seq.per_fold == par.per_fold


def test_evaluate_scores_pair(bundles):
    truth = bundles[0].ground_truth
    auc, prc = evaluate_scores(ScoreMatrix(truth.edges.astype(float)), truth)
    assert auc == 1.0 and prc == 1.0
