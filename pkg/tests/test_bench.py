import numpy as np
import pytest

from graph_infill.bench import (
    BenchRow, benchmark_scaling, format_table, random_graph, scaling_exponent, time_epochs,
)
from graph_infill.gacls import TrainConfig

SMALL = TrainConfig(hidden_dim=8, generator_hidden=16)


def test_random_graph_has_exact_edge_count():
    g = random_graph(50, 300, np.random.default_rng(0))
    assert g.num_edges == 300
    dense = g.to_scipy().toarray()
    assert np.array_equal(dense, dense.T) and not np.diag(dense).any()
    with pytest.raises(ValueError, match="at most 6"):
        random_graph(4, 7, np.random.default_rng(0))
    assert random_graph(4, 6, np.random.default_rng(0)).num_edges == 6


def test_scaling_exponent_recovers_power_law():
    rows = [BenchRow(100, m, 8, 1e-6 * m ** 1.3) for m in (100, 200, 400, 800)]
    assert scaling_exponent(rows, "num_edges") == pytest.approx(1.3)
    with pytest.raises(ValueError, match="feature_dim"):
        scaling_exponent(rows, "feature_dim")


def test_tiny_graph_epoch_under_a_second():
    rng = np.random.default_rng(0)
    from graph_infill.bench import random_features
    t = time_epochs(random_graph(10, 15, rng), random_features(10, 6, rng), epochs=2)
    assert t < 1.0


def test_benchmark_rows_and_table():
    rows = benchmark_scaling([(30, 40, 6), (30, 80, 6)], SMALL, epochs=1)
    assert [(r.num_nodes, r.num_edges, r.feature_dim) for r in rows] == [(30, 40, 6), (30, 80, 6)]
    assert all(r.seconds_per_epoch > 0 for r in rows)
    table = format_table(rows).splitlines()
    assert table[0].split("\t") == ["num_nodes", "num_edges", "feature_dim", "seconds_per_epoch"]
    assert len(table) == 3


@pytest.mark.slow
def test_edge_doubling_ratio_band():
    rows = benchmark_scaling([(1000, 200_000, 32), (1000, 400_000, 32)], TrainConfig(), epochs=5)
    ratio = rows[1].seconds_per_epoch / rows[0].seconds_per_epoch
    assert 1.5 <= ratio <= 2.8
