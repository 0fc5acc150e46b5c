"""Node-classification probe: a two-layer graph-convolution classifier
trained with k-fold cross-validation on the subgraph induced by target nodes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import engine as en
from .graph import SparseGraph, normalize


@dataclass(frozen=True)
class ProbeConfig:
    hidden_dim: int = 256
    dropout: float = 0.2
    lr: float = 1e-3
    max_epochs: int = 1000
    patience: int = 50  # epochs without training-loss improvement
    min_delta: float = 1e-4
    folds: int = 5
    seed: int = 0


def fold_partition(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Disjoint, covering folds of ``range(n)`` after a seeded shuffle."""
    if n < folds:
        raise ValueError(f"need at least {folds} target nodes for {folds}-fold CV, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, folds)]


def _fit_fold(ax, adj, labels, train_idx, test_idx, num_classes, cfg, rng):
    params = en.ParamSet({
        "w0": en.glorot(rng, ax.shape[1], cfg.hidden_dim), "b0": np.zeros(cfg.hidden_dim),
        "w1": en.glorot(rng, cfg.hidden_dim, num_classes), "b1": np.zeros(num_classes),
    })
    y_train = labels[train_idx]

    def forward(training):
        h = en.relu(en.add(en.const_matmul(ax, params["w0"]), params["b0"]))
        h = en.dropout(h, cfg.dropout, rng, training)
        return en.add(en.spmm(adj, en.matmul(h, params["w1"])), params["b1"])

    best, stale = np.inf, 0
    for _ in range(cfg.max_epochs):
        with en.Tape() as tape:
            loss = en.softmax_cross_entropy(en.take_rows(forward(True), train_idx), y_train)
        en.backward(tape, loss, params)
        en.adam_step(params, lr=cfg.lr)
        value = loss.item()
        if value < best - cfg.min_delta:
            best, stale = value, 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    with en.no_record():
        pred = forward(False).data[test_idx].argmax(axis=1)
    return float(np.mean(pred == labels[test_idx]))


def classify_probe(features, graph: SparseGraph, labels, target_nodes,
                   cfg: ProbeConfig = ProbeConfig()) -> list[float]:
    """Per-fold test accuracy of a GCN classifier on ``features[target_nodes]``.

    The classifier sees the subgraph induced by the target nodes (with
    self-loops in its normalization). Folds are seeded by ``cfg.seed``.
    Target nodes without a label (``-1``) are dropped first.
    """
    features = np.asarray(getattr(features, "values", features), dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    target = np.asarray(target_nodes, dtype=np.int64)
    target = target[labels[target] >= 0]
    folds = fold_partition(target.size, cfg.folds, cfg.seed)

    sub = graph.subgraph(target)
    adj = normalize(sub, self_loops=True)
    y = labels[target]
    num_classes = int(labels.max()) + 1
    # the first propagation is parameter-free, so it is done once; binary
    # attribute matrices stay sparse after it
    ax = adj.matrix @ sp.csr_matrix(features[target])
    if ax.nnz > 0.25 * ax.shape[0] * ax.shape[1]:
        ax = ax.toarray()
    accs = []
    for k, test_idx in enumerate(folds):
        train_idx = np.sort(np.concatenate([f for j, f in enumerate(folds) if j != k]))
        rng = np.random.default_rng([cfg.seed, k])
        accs.append(_fit_fold(ax, adj, y, train_idx, test_idx, num_classes, cfg, rng))
    return accs
