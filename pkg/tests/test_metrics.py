import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graph_infill.metrics import ndcg_at_k, ranking_report, recall_at_k, top_k
from oracles import ranking_by_sort, recall_ndcg_oracle

SCORES = [[0.9, 0.1, 0.8, 0.2]]
TRUTH = [[1, 0, 0, 1]]


def test_recall_example():
    assert recall_at_k(SCORES, TRUTH, 2) == 0.5


def test_ndcg_example():
    want = 1 / (1 + 1 / math.log2(3))
    assert want == pytest.approx(0.6131, abs=5e-5)
    assert ndcg_at_k(SCORES, TRUTH, 2) == pytest.approx(want, abs=1e-15)


def test_perfect_scores():
    truth = np.array([[1, 0, 1, 0, 0], [0, 0, 0, 1, 0]])
    assert recall_at_k(truth.astype(float), truth, 2) == 1.0
    assert ndcg_at_k(truth.astype(float), truth, 3) == 1.0


def test_empty_rows_are_skipped_and_counted():
    scores = np.array([[0.9, 0.1, 0.8, 0.2], [1.0, 2.0, 3.0, 4.0]])
    truth = np.array([[1, 0, 0, 1], [0, 0, 0, 0]])
    assert recall_at_k(scores, truth, 2) == 0.5
    rep = ranking_report(scores, truth, ks=(2,))
    assert rep["skipped_rows"] == 1
    assert math.isnan(recall_at_k(scores[1:], truth[1:], 2))


def test_ties_break_toward_lower_column():
    assert top_k(np.array([[1.0, 3.0, 3.0, 3.0]]), 2).tolist() == [[1, 2]]
    assert recall_at_k([[0.0, 0.0, 0.0]], [[0, 0, 1]], 2) == 0.0
    assert recall_at_k([[0.0, 0.0, 0.0]], [[0, 1, 0]], 2) == 1.0


@pytest.mark.parametrize("k", [0, 5, -1])
def test_invalid_k(k):
    with pytest.raises(ValueError, match="k must"):
        recall_at_k(SCORES, TRUTH, k)
    with pytest.raises(ValueError, match="k must"):
        ndcg_at_k(SCORES, TRUTH, k)


def test_shape_mismatch():
    with pytest.raises(ValueError, match="shapes"):
        recall_at_k(SCORES, [[1, 0, 0]], 1)


def test_uniform_random_scores_give_k_over_d():
    rng = np.random.default_rng(0)
    scores = rng.random((4000, 40))
    assert recall_at_k(scores, np.ones((4000, 40)), 10) == 0.25
    half = (rng.random((4000, 40)) < 0.5).astype(int)
    assert abs(recall_at_k(scores, half, 10) - 0.25) < 0.01


def test_full_ideal_grows_with_k():
    rng = np.random.default_rng(1)
    scores, truth = rng.random((30, 20)), rng.random((30, 20)) < 0.4
    vals = [ndcg_at_k(scores, truth, k, ideal="full") for k in range(1, 21)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    for k in (3, 9):
        assert ndcg_at_k(scores, truth, k, ideal="full") == pytest.approx(
            recall_ndcg_oracle(scores, truth, k, ideal="full")[1], abs=1e-12)
    with pytest.raises(ValueError, match="ideal"):
        ndcg_at_k(scores, truth, 3, ideal="other")


def brute_force_top_k(row, k):
    """Top-k by enumerating every k-subset in column order and keeping the best."""
    best = None
    for combo in itertools.combinations(range(len(row)), k):
        key = sorted((-row[j], j) for j in combo)
        if best is None or key < best:
            best = key
    return [j for _, j in best]


@st.composite
def instances(draw):
    seed = draw(st.integers(0, 2**31))
    coarse = draw(st.booleans())
    rng = np.random.default_rng(seed)
    scores = rng.integers(0, 4, size=(8, 12)).astype(float) if coarse else rng.random((8, 12))
    truth = (rng.random((8, 12)) < draw(st.floats(0.05, 0.9))).astype(int)
    truth[int(rng.integers(0, 8))] = 0
    truth[int(rng.integers(0, 8)), int(rng.integers(0, 12))] = 1
    return scores, truth


@given(instances())
def test_top_k_matches_exhaustive_enumeration(inst):
    scores, _ = inst
    for k in (1, 3, 6):
        got = top_k(scores, k).tolist()
        assert got == [brute_force_top_k(row, k) for row in scores.tolist()]
    for k in range(1, 13):
        assert top_k(scores, k).tolist() == [ranking_by_sort(r, k) for r in scores.tolist()]


@given(instances())
def test_metrics_match_loop_oracle_for_all_k(inst):
    scores, truth = inst
    for k in range(1, 13):
        want_r, want_n = recall_ndcg_oracle(scores, truth, k)
        assert recall_at_k(scores, truth, k) == pytest.approx(want_r, abs=1e-12)
        assert ndcg_at_k(scores, truth, k) == pytest.approx(want_n, abs=1e-12)


@given(instances())
def test_bounds_and_monotone_recall(inst):
    scores, truth = inst
    recalls = [recall_at_k(scores, truth, k) for k in range(1, 13)]
    assert all(b >= a - 1e-15 for a, b in zip(recalls, recalls[1:]))
    assert recalls[-1] == pytest.approx(1.0)
    for k in range(1, 13):
        assert 0.0 <= ndcg_at_k(scores, truth, k) <= 1.0 + 1e-12


def test_report_keys():
    rng = np.random.default_rng(2)
    rep = ranking_report(rng.random((5, 60)), rng.random((5, 60)) < 0.2)
    assert set(rep) == {"recall_at", "ndcg_at", "ndcg_full_at", "skipped_rows"}
    assert list(rep["recall_at"]) == [10, 20, 50]
