"""Stochastic graph views: column-wise feature masking and undirected edge dropout."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import FeatureMatrix, SparseGraph, build_graph


@dataclass(frozen=True)
class AugmentConfig:
    feature_mask_prob: float = 0.25
    edge_drop_prob: float = 0.25
    seed: int = 0

    def __post_init__(self):
        for name in ("feature_mask_prob", "edge_drop_prob"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {p}")


def augment_view(
    features: FeatureMatrix,
    graph: SparseGraph,
    cfg: AugmentConfig,
    rng: np.random.Generator | None = None,
) -> tuple[FeatureMatrix, SparseGraph]:
    """One augmented view of ``(features, graph)``.

    A single Bernoulli keep-mask over feature columns (keep prob ``1 - p``)
    is shared by every row, and each undirected edge is dropped independently.
    Draws come from ``rng`` when given, else from ``default_rng(cfg.seed)``.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    keep_cols = rng.random(features.shape[1]) >= cfg.feature_mask_prob
    edges = graph.edges()
    keep_edges = rng.random(edges.shape[0]) >= cfg.edge_drop_prob

    values = features.values if keep_cols.all() else features.values * keep_cols
    new_graph = graph if keep_edges.all() else build_graph(edges[keep_edges], graph.num_nodes)
    return FeatureMatrix(values, features.observed_mask), new_graph
