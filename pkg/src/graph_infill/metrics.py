"""Ranking metrics for attribute imputation.

Each row of ``scores`` ranks the attribute columns of one node; ``truth`` is
the binary ground truth. Ties are broken toward the lower column index.
Rows without any true attribute are skipped, not scored as zero.
"""
from __future__ import annotations

import numpy as np


def _validate(scores, truth, k):
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth) != 0
    if scores.ndim != 2 or scores.shape != truth.shape:
        raise ValueError(f"scores {scores.shape} and truth {truth.shape} must be equal 2-D shapes")
    k = int(k)
    if not 0 < k <= scores.shape[1]:
        raise ValueError(f"k must lie in [1, {scores.shape[1]}], got {k}")
    return scores, truth, k


def top_k(scores: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the ``k`` highest scores per row, best first."""
    # stable sort of negated scores keeps equal scores in column order
    return np.argsort(-scores, axis=1, kind="stable")[:, :k]


def _hits(scores, truth, k):
    top = top_k(scores, k)
    return np.take_along_axis(truth, top, axis=1)


def recall_at_k(scores, truth, k: int) -> float:
    """Mean over scored rows of ``|top-k ∩ true| / |true|``."""
    scores, truth, k = _validate(scores, truth, k)
    n_true = truth.sum(axis=1)
    keep = n_true > 0
    if not keep.any():
        return float("nan")
    hits = _hits(scores[keep], truth[keep], k).sum(axis=1)
    return float(np.mean(hits / n_true[keep]))


def _discounts(k):
    return 1.0 / np.log2(np.arange(2, k + 2))


def ndcg_at_k(scores, truth, k: int, ideal: str = "truncated") -> float:
    """Mean NDCG@k with binary gains.

    ``ideal="truncated"`` normalizes by the ideal DCG of ``min(k, |true|)``
    hits; ``ideal="full"`` uses all ``|true|`` hits, so values grow with k.
    """
    scores, truth, k = _validate(scores, truth, k)
    n_true = truth.sum(axis=1)
    keep = n_true > 0
    if not keep.any():
        return float("nan")
    disc = _discounts(k)
    dcg = (_hits(scores[keep], truth[keep], k) * disc).sum(axis=1)
    if ideal == "truncated":
        cum = np.concatenate([[0.0], np.cumsum(disc)])
        idcg = cum[np.minimum(n_true[keep], k)]
    elif ideal == "full":
        all_disc = np.concatenate([[0.0], np.cumsum(_discounts(int(n_true.max())))])
        idcg = all_disc[n_true[keep]]
    else:
        raise ValueError(f"ideal must be 'truncated' or 'full', got {ideal!r}")
    return float(np.mean(dcg / idcg))


def ranking_report(scores, truth, ks=(10, 20, 50)) -> dict:
    """Recall and NDCG at every ``k`` plus the number of skipped rows."""
    truth = np.asarray(truth) != 0
    skipped = int((truth.sum(axis=1) == 0).sum())
    return {
        "recall_at": {int(k): recall_at_k(scores, truth, k) for k in ks},
        "ndcg_at": {int(k): ndcg_at_k(scores, truth, k) for k in ks},
        "ndcg_full_at": {int(k): ndcg_at_k(scores, truth, k, ideal="full") for k in ks},
        "skipped_rows": skipped,
    }
