import math

import numpy as np
import pytest

from sesscmf.data import Event, InteractionLog, SparseBinaryMatrix, Vocab
from sesscmf.errors import DataError
from sesscmf.evaluation import (
    evaluate_model,
    map_at_k,
    ndcg_at_k,
    precision_at_k,
    recall_at_k,
    heldout_truth_sets,
    write_metrics_csv,
)
from sesscmf.factorization import FactorModel, recommend_topk


class TestMetricExamples:
    def test_recall(self):
        assert recall_at_k([2, 5, 9], {5, 7}, 3) == 0.5

    def test_recall_full(self):
        assert recall_at_k([1, 2, 3], {1, 2}, 3) == 1.0

    def test_recall_none(self):
        assert recall_at_k([1, 2, 3], {9}, 3) == 0.0

    def test_precision(self):
        assert precision_at_k([2, 5, 9], {5, 7}, 3) == pytest.approx(1 / 3, abs=1e-15)

    def test_precision_full(self):
        assert precision_at_k([1, 2], {1, 2}, 2) == 1.0

    def test_precision_none(self):
        assert precision_at_k([1, 2], {3}, 2) == 0.0

    def test_precision_short_list_divides_by_k(self):
        assert precision_at_k([5], {5}, 4) == 0.25

    def test_ndcg(self):
        expected = (1 / math.log2(3)) / 1.0
        assert ndcg_at_k(["a", "b", "c"], {"b"}, 3) == pytest.approx(
            expected, abs=1e-15
        )

    def test_ndcg_perfect(self):
        assert ndcg_at_k([7, 1], {7}, 2) == 1.0

    def test_ndcg_none(self):
        assert ndcg_at_k([1, 2], {3}, 2) == 0.0

    def test_map(self):
        assert map_at_k(["a", "b", "c"], {"a", "c"}, 3) == pytest.approx(
            (1.0 + 2 / 3) / 2, abs=1e-15
        )

    def test_map_perfect(self):
        assert map_at_k([4, 5, 6], {4, 5}, 3) == 1.0

    def test_map_none(self):
        assert map_at_k([1], {2}, 1) == 0.0

    def test_empty_truth_errors(self):
        for fn in (recall_at_k, precision_at_k, ndcg_at_k, map_at_k):
            with pytest.raises(ValueError):
                fn([1, 2], set(), 2)


class TestMetricProperties:
    def test_intersection_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n_items = int(rng.integers(3, 30))
            recs = rng.permutation(n_items)[: rng.integers(1, n_items + 1)]
            recs = [int(r) for r in recs]
            truth = {int(t) for t in rng.integers(0, n_items, rng.integers(1, 8))}
            k = int(rng.integers(1, n_items + 2))
            inter = len(set(recs[:k]) & truth)
            assert precision_at_k(recs, truth, k) * k == pytest.approx(inter)
            assert recall_at_k(recs, truth, k) * len(truth) == pytest.approx(inter)

    def test_relabel_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            recs = [int(r) for r in rng.permutation(12)[:6]]
            truth = {int(t) for t in rng.integers(0, 12, 4)}
            k = int(rng.integers(1, 8))
            perm = rng.permutation(12)
            recs2 = [int(perm[r]) for r in recs]
            truth2 = {int(perm[t]) for t in truth}
            for fn in (recall_at_k, precision_at_k, ndcg_at_k, map_at_k):
                assert fn(recs, truth, k) == pytest.approx(fn(recs2, truth2, k))

    def test_swap_upward_monotone(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            n = 10
            recs = [int(r) for r in rng.permutation(n)]
            truth = {int(t) for t in rng.permutation(n)[:3]}
            k = int(rng.integers(2, n + 1))
            # find a relevant item below an irrelevant one and swap them
            positions = [
                (a, b)
                for a in range(len(recs))
                for b in range(a + 1, len(recs))
                if recs[a] not in truth and recs[b] in truth
            ]
            if not positions:
                continue
            a, b = positions[rng.integers(len(positions))]
            swapped = list(recs)
            swapped[a], swapped[b] = swapped[b], swapped[a]
            for fn in (ndcg_at_k, map_at_k):
                assert fn(swapped, truth, k) >= fn(recs, truth, k) - 1e-15


def make_eval_setup():
    # 3 users, 4 items; user 2 has no training items
    X = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    Y = np.array([[0.9, 0.1], [0.1, 0.9], [0.8, 0.2], [0.2, 0.8]])
    model = FactorModel(X, Y)
    R = SparseBinaryMatrix.from_pairs([(0, 0), (1, 1)], 3, 4)
    truth = {0: {2}, 1: {0, 3}, 2: {1}}
    return model, R, truth


class TestEvaluateModel:
    def test_counts_and_skips(self):
        model, R, truth = make_eval_setup()
        report = evaluate_model(model, R, truth, [2])
        assert report.users_evaluated == 2
        assert report.users_skipped == 1

    def test_average_is_mean_of_per_user(self):
        model, R, truth = make_eval_setup()
        report = evaluate_model(model, R, truth, [1, 2])
        for k in (1, 2):
            per_user = []
            for u in (0, 1):
                exclude = {int(i) for i in R.row_items(u)}
                recs = [i for i, _ in recommend_topk(model, u, 2, exclude=exclude)]
                per_user.append(recall_at_k(recs, truth[u], k))
            assert report.per_metric[("recall", k)] == pytest.approx(
                sum(per_user) / 2, abs=1e-12
            )

    def test_training_items_excluded(self):
        model, R, truth = make_eval_setup()
        recs = [i for i, _ in recommend_topk(model, 0, 4, exclude={0})]
        assert 0 not in recs
        # a test item that is also a training item can never be recommended
        truth_with_seen = {0: {0}}
        report = evaluate_model(model, R, truth_with_seen, [4])
        assert report.per_metric[("recall", 4)] == 0.0

    def test_averaging_two_users(self):
        X = np.array([[1.0], [1.0]])
        Y = np.array([[0.9], [0.5], [0.1]])
        model = FactorModel(X, Y)
        R = SparseBinaryMatrix.from_pairs([(0, 2), (1, 2)], 2, 3)
        # user 0 hits (truth = top item), user 1 misses entirely
        truth = {0: {0}, 1: {1}}
        report = evaluate_model(model, R, truth, [1])
        assert report.per_metric[("recall", 1)] == 0.5

    def test_no_evaluable_users(self):
        model, R, _ = make_eval_setup()
        with pytest.raises(DataError):
            evaluate_model(model, R, {2: {1}}, [2])

    def test_bad_cutoffs(self):
        model, R, truth = make_eval_setup()
        with pytest.raises(ValueError):
            evaluate_model(model, R, truth, [])
        with pytest.raises(ValueError):
            evaluate_model(model, R, truth, [0])

    def test_values_in_unit_interval(self):
        rng = np.random.default_rng(5)
        n, m = 12, 15
        model = FactorModel(rng.random((n, 3)), rng.random((m, 3)))
        pairs = {(int(u), int(i)) for u, i in zip(rng.integers(0, n, 40),
                                                  rng.integers(0, m, 40))}
        R = SparseBinaryMatrix.from_pairs(pairs, n, m)
        truth = {
            u: {int(i) for i in rng.integers(0, m, 3)} for u in range(n)
        }
        report = evaluate_model(model, R, truth, [1, 5, 10])
        for value in report.per_metric.values():
            assert 0.0 <= value <= 1.0
        assert report.users_evaluated + report.users_skipped == len(
            [u for u, t in truth.items() if t]
        )


class TestTruthSets:
    def test_maps_and_drops(self):
        vocab = Vocab(["a", "b"], ["x", "y"])
        log = InteractionLog(
            [
                Event("a", "x", 0),
                Event("a", "zz", 1),  # unknown item dropped
                Event("qq", "x", 2),  # unknown user dropped
                Event("b", "y", 3),
                Event("a", "x", 4),  # duplicate collapses
            ]
        )
        truth = heldout_truth_sets(log, vocab)
        assert truth == {0: {0}, 1: {1}}


class TestMetricsCsv:
    def test_format(self, tmp_path):
        model, R, truth = make_eval_setup()
        report = evaluate_model(model, R, truth, [2, 1])
        path = tmp_path / "metrics.csv"
        write_metrics_csv(report, "wmf", path)
        lines = path.read_text().splitlines()
        assert lines[0] == "method,metric,k,value,users_evaluated"
        assert len(lines) == 1 + 4 * 2
        for line in lines[1:]:
            method, metric, k, value, users = line.split(",")
            assert method == "wmf"
            assert metric in ("recall", "precision", "ndcg", "map")
            assert k in ("1", "2")
            assert len(value.split(".")[1]) == 6
            assert users == "2"
