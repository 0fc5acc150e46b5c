"""Per-epoch wall-time measurements on synthetic graphs."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .gacls import GaclsModel, TrainConfig, train_epoch, view_generators
from .graph import FeatureMatrix, SparseGraph, build_graph


def random_graph(num_nodes: int, num_edges: int, rng: np.random.Generator) -> SparseGraph:
    """Uniform simple graph with exactly ``num_edges`` undirected edges."""
    max_edges = num_nodes * (num_nodes - 1) // 2
    if num_edges > max_edges:
        raise ValueError(f"{num_nodes} nodes hold at most {max_edges} edges, asked for {num_edges}")
    codes = np.empty(0, dtype=np.int64)
    while codes.size < num_edges:
        need = num_edges - codes.size
        a = rng.integers(0, num_nodes, size=2 * need + 16)
        b = rng.integers(0, num_nodes, size=2 * need + 16)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        fresh = (lo * num_nodes + hi)[lo != hi]
        codes = np.union1d(codes, fresh)
    codes = rng.permutation(codes)[:num_edges]
    return build_graph(np.stack(np.divmod(codes, num_nodes), axis=1), num_nodes)


def random_features(num_nodes: int, dim: int, rng: np.random.Generator, density: float = 0.05) -> FeatureMatrix:
    return FeatureMatrix.fully_observed((rng.random((num_nodes, dim)) < density).astype(float))


@dataclass(frozen=True)
class BenchRow:
    num_nodes: int
    num_edges: int
    feature_dim: int
    seconds_per_epoch: float


def time_epochs(graph: SparseGraph, features: FeatureMatrix, cfg: TrainConfig = TrainConfig(),
                epochs: int = 5, warmup: int = 1) -> float:
    """Median wall time of one training epoch (after ``warmup`` untimed epochs)."""
    model = GaclsModel.create(features.shape[1], np.random.default_rng(cfg.seed),
                              cfg.hidden_dim, cfg.generator_hidden)
    rngs = view_generators(cfg)
    times = []
    for e in range(warmup + epochs):
        t0 = time.perf_counter()
        train_epoch(model, cfg, features, graph, rngs, epoch=e)
        if e >= warmup:
            times.append(time.perf_counter() - t0)
    return float(np.median(times))


def benchmark_scaling(sizes, cfg: TrainConfig = TrainConfig(), epochs: int = 5,
                      seed: int = 0) -> list[BenchRow]:
    """Time one epoch for every ``(num_nodes, num_edges, feature_dim)`` in ``sizes``."""
    rows = []
    for n, m, d in sizes:
        rng = np.random.default_rng([seed, n, m, d])
        graph = random_graph(n, m, rng)
        feats = random_features(n, d, rng)
        rows.append(BenchRow(n, m, d, time_epochs(graph, feats, cfg, epochs)))
    return rows


def scaling_exponent(rows: list[BenchRow], along: str) -> float:
    """Least-squares slope of log(time) against log(``along``) over ``rows``.

    ``along`` is ``"num_edges"``, ``"num_nodes"`` or ``"feature_dim"``; a
    slope near 1 means linear growth.
    """
    x = np.log([getattr(r, along) for r in rows])
    y = np.log([r.seconds_per_epoch for r in rows])
    if np.ptp(x) == 0:
        raise ValueError(f"rows do not vary in {along}")
    return float(np.polyfit(x, y, 1)[0])


def format_table(rows: list[BenchRow]) -> str:
    lines = ["num_nodes\tnum_edges\tfeature_dim\tseconds_per_epoch"]
    lines += [f"{r.num_nodes}\t{r.num_edges}\t{r.feature_dim}\t{r.seconds_per_epoch:.6f}" for r in rows]
    return "\n".join(lines)
