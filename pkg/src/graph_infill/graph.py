"""Immutable graph containers: CSR adjacency, partially observed features,
the symmetric degree-normalized operator, and node splits."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sp


class GraphError(ValueError):
    """Malformed graph input (bad node id, inconsistent shapes)."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    if a.flags.writeable:
        a = a.copy()  # never freeze a caller's buffer
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Undirected simple graph in CSR form.

    Rows are sorted, symmetric, and carry no self-loops or duplicates.
    Build instances with :func:`build_graph` rather than directly.
    """

    num_nodes: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    degrees: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_offsets", _frozen(self.row_offsets.astype(np.int64)))
        object.__setattr__(self, "col_indices", _frozen(self.col_indices.astype(np.int64)))
        object.__setattr__(self, "degrees", _frozen(self.degrees.astype(np.int64)))

    @property
    def num_entries(self) -> int:
        """Stored (directed) adjacency entries, i.e. twice the edge count."""
        return int(self.col_indices.shape[0])

    @property
    def num_edges(self) -> int:
        return self.num_entries // 2

    def row_ids(self) -> np.ndarray:
        """Source node of every stored entry, aligned with ``col_indices``."""
        return np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees)

    def neighbors(self, i: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[i]: self.row_offsets[i + 1]]

    def edges(self) -> np.ndarray:
        """Undirected edges as an ``(m, 2)`` array with ``i < j``, row-major order."""
        rows = self.row_ids()
        keep = rows < self.col_indices
        return np.stack([rows[keep], self.col_indices[keep]], axis=1)

    def to_scipy(self, weights: np.ndarray | None = None) -> sp.csr_matrix:
        data = np.ones(self.num_entries) if weights is None else np.asarray(weights, dtype=float)
        return sp.csr_matrix(
            (data, self.col_indices, self.row_offsets), shape=(self.num_nodes, self.num_nodes)
        )

    def subgraph(self, nodes: Iterable[int]) -> SparseGraph:
        """Induced subgraph; node ``nodes[k]`` becomes node ``k``."""
        nodes = np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64)
        relabel = np.full(self.num_nodes, -1, dtype=np.int64)
        relabel[nodes] = np.arange(nodes.shape[0])
        rows, cols = self.row_ids(), self.col_indices
        keep = (relabel[rows] >= 0) & (relabel[cols] >= 0)
        pairs = np.stack([relabel[rows[keep]], relabel[cols[keep]]], axis=1)
        return build_graph(pairs, nodes.shape[0])


def build_graph(edge_list, num_nodes: int) -> SparseGraph:
    """Build a deduplicated, symmetrized, self-loop-free CSR graph.

    ``edge_list`` is any ``(m, 2)`` integer array-like; duplicates and both
    orientations are allowed. Raises :class:`GraphError` naming the first
    edge with an endpoint outside ``[0, num_nodes)``.
    """
    num_nodes = int(num_nodes)
    if num_nodes < 0:
        raise GraphError(f"num_nodes must be non-negative, got {num_nodes}")
    edges = np.asarray(edge_list, dtype=np.int64).reshape(-1, 2)
    bad = np.flatnonzero((edges < 0).any(axis=1) | (edges >= num_nodes).any(axis=1))
    if bad.size:
        k = int(bad[0])
        raise GraphError(
            f"edge #{k} ({edges[k, 0]}, {edges[k, 1]}) has a node id outside [0, {num_nodes})"
        )
    edges = edges[edges[:, 0] != edges[:, 1]]
    both = np.concatenate([edges, edges[:, ::-1]])
    codes = np.unique(both[:, 0] * max(num_nodes, 1) + both[:, 1])
    rows, cols = np.divmod(codes, max(num_nodes, 1))
    degrees = np.bincount(rows, minlength=num_nodes)
    offsets = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(degrees, out=offsets[1:])
    return SparseGraph(num_nodes, offsets, cols, degrees)


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Dense ``N x d`` attribute matrix plus a per-row observed flag."""

    values: np.ndarray
    observed_mask: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.observed_mask, dtype=bool)
        if values.ndim != 2:
            raise GraphError(f"feature values must be 2-D, got shape {values.shape}")
        if mask.shape != (values.shape[0],):
            raise GraphError(
                f"observed_mask shape {mask.shape} does not match {values.shape[0]} rows"
            )
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "observed_mask", _frozen(mask))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @classmethod
    def fully_observed(cls, values) -> FeatureMatrix:
        values = np.asarray(values, dtype=np.float64)
        return cls(values, np.ones(values.shape[0], dtype=bool))


@dataclass(frozen=True, eq=False)
class NormalizedAdjacency:
    """Symmetric normalization ``w_ij = 1/sqrt(d_i d_j)`` on the graph's pattern.

    With ``self_loops=True`` (classifier use only) degrees count the added
    loop and ``diagonal`` holds ``1/(d_i + 1)``; otherwise ``diagonal`` is None.
    """

    graph: SparseGraph
    edge_weights: np.ndarray
    diagonal: np.ndarray | None = None
    matrix: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "edge_weights", _frozen(np.asarray(self.edge_weights, float)))
        m = self.graph.to_scipy(self.edge_weights)
        if self.diagonal is not None:
            object.__setattr__(self, "diagonal", _frozen(np.asarray(self.diagonal, float)))
            m = (m + sp.diags(self.diagonal)).tocsr()
            m.sort_indices()
        object.__setattr__(self, "matrix", m)

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    def weight(self, i: int, j: int) -> float:
        lo, hi = self.graph.row_offsets[i], self.graph.row_offsets[i + 1]
        pos = lo + np.searchsorted(self.graph.col_indices[lo:hi], j)
        if pos < hi and self.graph.col_indices[pos] == j:
            return float(self.edge_weights[pos])
        return 0.0


def normalize(graph: SparseGraph, self_loops: bool = False) -> NormalizedAdjacency:
    """Degree-normalize ``graph``; isolated nodes get empty rows."""
    deg = graph.degrees.astype(np.float64) + (1.0 if self_loops else 0.0)
    rows = graph.row_ids()
    # d_i * d_j is commutative, so w_ij == w_ji bitwise
    weights = 1.0 / np.sqrt(deg[rows] * deg[graph.col_indices])
    diagonal = 1.0 / deg if self_loops else None
    return NormalizedAdjacency(graph, weights, diagonal)


@dataclass(frozen=True, eq=False)
class Split:
    """Partition of nodes into observed (training), validation and test sets."""

    train_observed: np.ndarray
    missing_val: np.ndarray
    missing_test: np.ndarray
    seed: int

    def __post_init__(self):
        for name in ("train_observed", "missing_val", "missing_test"):
            object.__setattr__(self, name, _frozen(np.sort(np.asarray(getattr(self, name), np.int64))))

    @property
    def num_nodes(self) -> int:
        return self.train_observed.size + self.missing_val.size + self.missing_test.size

    @property
    def missing(self) -> np.ndarray:
        return np.sort(np.concatenate([self.missing_val, self.missing_test]))

    def observed_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_nodes, dtype=bool)
        mask[self.train_observed] = True
        return mask

    def __eq__(self, other):
        if not isinstance(other, Split):
            return NotImplemented
        return self.seed == other.seed and all(
            np.array_equal(getattr(self, n), getattr(other, n))
            for n in ("train_observed", "missing_val", "missing_test")
        )
