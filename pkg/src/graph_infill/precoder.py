"""Feature precoding: fill missing rows by diffusing observed features over
the normalized adjacency, resetting observed rows after every round.

The iteration is ``X <- A_norm X`` followed by clamping, whose fixed point is
the harmonic extension ``X_m = (I - A_mm)^{-1} A_mo X_o``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from .graph import FeatureMatrix, NormalizedAdjacency


class PrecoderError(ValueError):
    pass


@dataclass(frozen=True)
class PrecoderConfig:
    iterations: int = 40
    convergence_tol: float = 0.0  # 0 runs exactly `iterations` rounds
    clamp_observed: bool = True

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.convergence_tol < 0:
            raise ValueError(f"convergence_tol must be >= 0, got {self.convergence_tol}")


def _check_dims(features: FeatureMatrix, adj: NormalizedAdjacency):
    if features.shape[0] != adj.num_nodes:
        raise PrecoderError(
            f"feature matrix has {features.shape[0]} rows but the graph has {adj.num_nodes} nodes"
        )


def iterate_propagation(
    features: FeatureMatrix, adj: NormalizedAdjacency, cfg: PrecoderConfig = PrecoderConfig()
) -> Iterator[np.ndarray]:
    """Yield the initial matrix and then every propagated iterate.

    Missing rows start at zero. Stops after ``cfg.iterations`` rounds, or
    earlier once the max-abs change falls below a nonzero ``convergence_tol``.
    The yielded arrays are fresh copies.
    """
    _check_dims(features, adj)
    mask = features.observed_mask
    x0 = np.where(mask[:, None], features.values, 0.0)
    out = x0.copy()
    yield out.copy()
    for _ in range(cfg.iterations):
        nxt = adj.matrix @ out
        if cfg.clamp_observed:
            nxt[mask] = x0[mask]
        delta = np.abs(nxt - out).max() if out.size else 0.0
        out = nxt
        yield out.copy()
        if cfg.convergence_tol > 0 and delta <= cfg.convergence_tol:
            break


def propagate(
    features: FeatureMatrix, adj: NormalizedAdjacency, cfg: PrecoderConfig = PrecoderConfig()
) -> FeatureMatrix:
    """Precoded features; ``observed_mask`` is carried over unchanged."""
    out = None
    for out in iterate_propagation(features, adj, cfg):
        pass
    return FeatureMatrix(out, features.observed_mask)


def harmonic_oracle(features: FeatureMatrix, adj: NormalizedAdjacency) -> FeatureMatrix:
    """Exact clamped fixed point by a dense linear solve (small graphs only).

    Raises :class:`PrecoderError` when a connected component with at least one
    edge contains no observed node, since ``I - A_mm`` is singular there.
    """
    _check_dims(features, adj)
    mask = features.observed_mask
    miss = np.flatnonzero(~mask)
    obs = np.flatnonzero(mask)
    out = np.where(mask[:, None], features.values, 0.0)
    if miss.size == 0:
        return FeatureMatrix(out, mask)

    n_comp, comp = connected_components(adj.graph.to_scipy(), directed=False)
    has_obs = np.zeros(n_comp, dtype=bool)
    has_obs[comp[obs]] = True
    sizes = np.bincount(comp, minlength=n_comp)
    for c in np.flatnonzero(~has_obs & (sizes > 1)):
        nodes = np.flatnonzero(comp == c)
        raise PrecoderError(
            f"missing nodes {nodes[:10].tolist()}{'...' if nodes.size > 10 else ''} form a "
            "component with no observed node; the harmonic system is singular"
        )

    a = adj.matrix
    a_mm = a[miss][:, miss].toarray()
    rhs = a[miss][:, obs] @ out[obs]
    system = np.eye(miss.size) - a_mm
    out[miss] = scipy.linalg.solve(system, rhs, assume_a="sym")
    return FeatureMatrix(out, mask)


def _edge_energy(x: np.ndarray, rows: np.ndarray, cols: np.ndarray, weights: np.ndarray, chunk: int = 4096) -> float:
    total = 0.0
    for s in range(0, rows.size, chunk):
        diff = x[rows[s: s + chunk]] - x[cols[s: s + chunk]]
        total += float(np.dot(weights[s: s + chunk], np.einsum("ij,ij->i", diff, diff)))
    return total


def dirichlet_energy(features: FeatureMatrix | np.ndarray, adj: NormalizedAdjacency) -> float:
    """``sum_{(i,j) in E} w_ij ||x_i - x_j||^2``, each undirected edge once."""
    x = features.values if isinstance(features, FeatureMatrix) else np.asarray(features, float)
    if x.shape[0] != adj.num_nodes:
        raise PrecoderError(f"feature matrix has {x.shape[0]} rows but the graph has {adj.num_nodes} nodes")
    g = adj.graph
    rows = g.row_ids()
    upper = rows < g.col_indices
    return _edge_energy(x, rows[upper], g.col_indices[upper], adj.edge_weights[upper])


def normalized_dirichlet_energy(features: FeatureMatrix | np.ndarray, adj: NormalizedAdjacency) -> float:
    """``sum_{(i,j) in E} ||x_i/sqrt(d_i) - x_j/sqrt(d_j)||^2``, i.e. ``tr(X^T (I - A) X)``
    over non-isolated nodes. This is the objective whose clamped minimizer
    :func:`propagate` converges to, and it never increases across iterations."""
    x = features.values if isinstance(features, FeatureMatrix) else np.asarray(features, float)
    g = adj.graph
    deg = g.degrees.astype(float)
    scale = np.zeros_like(deg)
    np.divide(1.0, np.sqrt(deg), out=scale, where=deg > 0)
    rows = g.row_ids()
    upper = rows < g.col_indices
    return _edge_energy(x * scale[:, None], rows[upper], g.col_indices[upper], np.ones(int(upper.sum())))
