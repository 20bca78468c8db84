"""Rank-based evaluation: Recall@k, Precision@k, nDCG@k, MAP@k."""

import math
import os
from collections.abc import Sequence
from dataclasses import dataclass

from .data import InteractionLog, SparseBinaryMatrix, Vocab
from .errors import DataError
from .factorization import FactorModel, recommend_topk

METRIC_NAMES = ("recall", "precision", "ndcg", "map")


@dataclass(frozen=True)
class EvalReport:
    per_metric: dict[tuple[str, int], float]
    users_evaluated: int
    users_skipped: int


def _check_truth(truth):
    if not truth:
        raise ValueError("truth set must be non-empty")


def recall_at_k(recs: Sequence[int], truth: set[int], k: int) -> float:
    _check_truth(truth)
    hits = sum(1 for r in recs[:k] if r in truth)
    return hits / len(truth)


def precision_at_k(recs: Sequence[int], truth: set[int], k: int) -> float:
    # denominator is k even when fewer than k items were recommended
    _check_truth(truth)
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = sum(1 for r in recs[:k] if r in truth)
    return hits / k


def ndcg_at_k(recs: Sequence[int], truth: set[int], k: int) -> float:
    """Binary-relevance nDCG: DCG over the top k against the ideal ranking."""
    _check_truth(truth)
    dcg = sum(
        1.0 / math.log2(rank + 1)
        for rank, r in enumerate(recs[:k], start=1)
        if r in truth
    )
    idcg = sum(1.0 / math.log2(rank + 1) for rank in range(1, min(k, len(truth)) + 1))
    return dcg / idcg


def map_at_k(recs: Sequence[int], truth: set[int], k: int) -> float:
    """Average precision at k: mean precision over hit ranks, over min(k, |truth|)."""
    _check_truth(truth)
    hits = 0
    prec_sum = 0.0
    for rank, r in enumerate(recs[:k], start=1):
        if r in truth:
            hits += 1
            prec_sum += hits / rank
    return prec_sum / min(k, len(truth))


_METRIC_FNS = {
    "recall": recall_at_k,
    "precision": precision_at_k,
    "ndcg": ndcg_at_k,
    "map": map_at_k,
}


def heldout_truth_sets(test_log: InteractionLog, vocab: Vocab) -> dict[int, set[int]]:
    """Per-user held-out item sets, mapped through the vocabulary.

    Events whose user or item is out of vocabulary are dropped.
    """
    truth: dict[int, set[int]] = {}
    u2i, v2i = vocab.user_to_index, vocab.item_to_index
    for e in test_log:
        u = u2i.get(e.user)
        i = v2i.get(e.item)
        if u is None or i is None:
            continue
        truth.setdefault(u, set()).add(i)
    return truth


def evaluate_model(
    model: FactorModel,
    train_R: SparseBinaryMatrix,
    test_truth: dict[int, set[int]],
    cutoffs: Sequence[int],
) -> EvalReport:
    """Average all four metrics over users with test items and a trained row.

    Each user's training items are excluded from their candidate list.
    Users whose training row is empty are skipped and counted; averages run
    over the evaluated users only.
    """
    cutoffs = sorted(set(int(k) for k in cutoffs))
    if not cutoffs or cutoffs[0] < 1:
        raise ValueError("cutoffs must be positive integers")
    if model.n_users != train_R.n_rows or model.n_items != train_R.n_cols:
        raise ValueError("model and training matrix shapes do not match")
    kmax = cutoffs[-1]
    sums = {(m, k): 0.0 for m in METRIC_NAMES for k in cutoffs}
    evaluated = 0
    skipped = 0
    for u in sorted(test_truth):
        truth = test_truth[u]
        if not truth:
            continue
        train_items = set(int(i) for i in train_R.row_items(u))
        if not train_items:
            skipped += 1
            continue
        recs = [i for i, _ in recommend_topk(model, u, kmax, exclude=train_items)]
        evaluated += 1
        for k in cutoffs:
            for m in METRIC_NAMES:
                sums[(m, k)] += _METRIC_FNS[m](recs, truth, k)
    if evaluated == 0:
        raise DataError("no evaluable users (all test users lack training rows)")
    per_metric = {key: val / evaluated for key, val in sums.items()}
    return EvalReport(per_metric, evaluated, skipped)


def write_metrics_csv(
    report: EvalReport, method: str, path: str | os.PathLike
) -> None:
    """Write `method,metric,k,value,users_evaluated` rows, values to 6 decimals."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("method,metric,k,value,users_evaluated\n")
        cutoffs = sorted({k for _, k in report.per_metric})
        for metric in METRIC_NAMES:
            for k in cutoffs:
                value = report.per_metric[(metric, k)]
                fh.write(f"{method},{metric},{k},{value:.6f},{report.users_evaluated}\n")
