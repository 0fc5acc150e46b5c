"""Differentiable primitives.

Every op computes its forward value with numpy and registers a gradient
rule. The rules are module-level ``_*_grad`` functions looked up at
backward time, which keeps them individually testable (and patchable).
Zero rows are a fixed convention for the normalizing ops: they map to zero
rows, a cosine of 0, and zero gradient.
"""
from __future__ import annotations

import numpy as np

from .autodiff import ShapeError, Tensor, as_tensor, emit


def _shape_error(op, a, b):
    return ShapeError(f"{op}: incompatible shapes {tuple(a)} and {tuple(b)}")


# -- linear algebra -----------------------------------------------------------

def _matmul_grad(g, a, b, needs):
    return (g @ b.T if needs[0] else None, a.T @ g if needs[1] else None)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise _shape_error("matmul", a.shape, b.shape)
    return emit("matmul", a.data @ b.data, (a, b),
                lambda g, needs: _matmul_grad(g, a.data, b.data, needs))


def _const_matmul_grad(g, const, needs):
    return (const.T @ g,)


def const_matmul(const, w) -> Tensor:
    """``const @ w`` for a fixed dense or scipy-sparse ``const``; only ``w`` gets a gradient."""
    w = as_tensor(w)
    if w.data.ndim != 2 or const.ndim != 2 or const.shape[1] != w.shape[0]:
        raise _shape_error("const_matmul", const.shape, w.shape)
    return emit("const_matmul", np.asarray(const @ w.data), (w,),
                lambda g, needs: _const_matmul_grad(g, const, needs))


def _spmm_grad(g, matrix, needs):
    # the normalized operator is symmetric, so its transpose is itself
    return (matrix @ g,)


def spmm(adj, dense) -> Tensor:
    """Sparse operator times dense matrix; ``adj`` is a NormalizedAdjacency."""
    dense = as_tensor(dense)
    matrix = adj.matrix
    if dense.data.ndim != 2 or matrix.shape[1] != dense.shape[0]:
        raise _shape_error("spmm", matrix.shape, dense.shape)
    return emit("spmm", matrix @ dense.data, (dense,),
                lambda g, needs: _spmm_grad(g, matrix, needs))


def _add_grad(g, a_shape, b_shape, needs):
    gb = None
    if needs[1]:
        gb = g.sum(axis=0) if len(b_shape) == 1 and len(a_shape) == 2 else g
    return (g if needs[0] else None, gb)


def add(a, b) -> Tensor:
    """Elementwise sum; ``b`` may also be a row vector added to every row of ``a``."""
    a, b = as_tensor(a), as_tensor(b)
    row_bias = a.data.ndim == 2 and b.data.ndim == 1 and b.shape[0] == a.shape[1]
    if a.shape != b.shape and not row_bias:
        raise _shape_error("add", a.shape, b.shape)
    return emit("add", a.data + b.data, (a, b),
                lambda g, needs: _add_grad(g, a.shape, b.shape, needs))


def _scale_grad(g, c, needs):
    return (g * c,)


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return emit("scale", a.data * c, (a,), lambda g, needs: _scale_grad(g, c, needs))


def _mean_grad(g, shape, needs):
    return (np.full(shape, float(g) / max(int(np.prod(shape)), 1)),)


def mean(a) -> Tensor:
    a = as_tensor(a)
    return emit("mean", np.asarray(a.data.mean()), (a,),
                lambda g, needs: _mean_grad(g, a.shape, needs))


def _concat_grad(g, k, needs):
    return (g[:, :k] if needs[0] else None, g[:, k:] if needs[1] else None)


def concat_cols(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[0] != b.shape[0]:
        raise _shape_error("concat_cols", a.shape, b.shape)
    k = a.shape[1]
    return emit("concat_cols", np.concatenate([a.data, b.data], axis=1), (a, b),
                lambda g, needs: _concat_grad(g, k, needs))


def _take_rows_grad(g, idx, shape, needs):
    out = np.zeros(shape)
    np.add.at(out, idx, g)
    return (out,)


def take_rows(a, idx) -> Tensor:
    a = as_tensor(a)
    idx = np.asarray(idx, dtype=np.int64)
    return emit("take_rows", a.data[idx], (a,),
                lambda g, needs: _take_rows_grad(g, idx, a.shape, needs))


# -- activations --------------------------------------------------------------

def _relu_grad(g, x, needs):
    return (g * (x > 0),)


def relu(a) -> Tensor:
    a = as_tensor(a)
    return emit("relu", np.maximum(a.data, 0.0), (a,),
                lambda g, needs: _relu_grad(g, a.data, needs))


def _dropout_grad(g, mask, needs):
    return (g * mask,)


def dropout(a, rate: float, rng: np.random.Generator | None = None, training: bool = True) -> Tensor:
    """Inverted dropout: kept entries are scaled by ``1/(1-rate)`` at train time.

    Identity when ``rate == 0`` or ``training`` is false.
    """
    a = as_tensor(a)
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return a
    if rng is None:
        raise ValueError("dropout at train time needs an rng")
    mask = (rng.random(a.shape) >= rate) / (1.0 - rate)
    return emit("dropout", a.data * mask, (a,), lambda g, needs: _dropout_grad(g, mask, needs))


# -- normalization and similarity --------------------------------------------

def _safe_norms(x):
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    inv = np.zeros_like(norms)
    np.divide(1.0, norms, out=inv, where=norms > 0)
    return norms, inv


def _row_l2_normalize_grad(g, y, inv, needs):
    return ((g - y * np.einsum("ij,ij->i", y, g)[:, None]) * inv[:, None],)


def row_l2_normalize(a) -> Tensor:
    a = as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"row_l2_normalize: expected a matrix, got shape {a.shape}")
    _, inv = _safe_norms(a.data)
    y = a.data * inv[:, None]
    return emit("row_l2_normalize", y, (a,),
                lambda g, needs: _row_l2_normalize_grad(g, y, inv, needs))


def _cosine_grad(g, ua, ub, inv_a, inv_b, cos, needs):
    g = g[:, None]
    ga = g * (ub - ua * cos[:, None]) * inv_a[:, None] if needs[0] else None
    gb = g * (ua - ub * cos[:, None]) * inv_b[:, None] if needs[1] else None
    return ga, gb


def cosine_rowwise(a, b) -> Tensor:
    """Cosine similarity of matching rows; a zero row gives 0."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape or a.data.ndim != 2:
        raise _shape_error("cosine_rowwise", a.shape, b.shape)
    _, inv_a = _safe_norms(a.data)
    _, inv_b = _safe_norms(b.data)
    ua, ub = a.data * inv_a[:, None], b.data * inv_b[:, None]
    cos = np.einsum("ij,ij->i", ua, ub)
    return emit("cosine_rowwise", cos, (a, b),
                lambda g, needs: _cosine_grad(g, ua, ub, inv_a, inv_b, cos, needs))


# -- losses -------------------------------------------------------------------

def _mse_grad(g, diff, rows, n, shape, needs):
    d = diff * (2.0 * float(g) / n)
    if rows is None:
        full = d
    else:
        full = np.zeros(shape)
        np.add.at(full, rows, d)
    return (full if needs[0] else None, -full if needs[1] else None)


def mse(x_hat, x, rows=None) -> Tensor:
    """``(1/n) * sum_i ||x_hat_i - x_i||^2`` over ``rows`` (all rows by default)."""
    x_hat, x = as_tensor(x_hat), as_tensor(x)
    if x_hat.shape != x.shape:
        raise _shape_error("mse", x_hat.shape, x.shape)
    if rows is None:
        diff = x_hat.data - x.data
        n = x_hat.shape[0]
    else:
        rows = np.asarray(rows, dtype=np.int64)
        diff = x_hat.data[rows] - x.data[rows]
        n = rows.shape[0]
    value = np.asarray(np.einsum("ij,ij->", diff, diff) / max(n, 1))
    shape = x_hat.shape
    return emit("mse", value, (x_hat, x),
                lambda g, needs: _mse_grad(g, diff, rows, max(n, 1), shape, needs))


def _xent_grad(g, probs, labels, needs):
    d = probs.copy()
    d[np.arange(labels.shape[0]), labels] -= 1.0
    return (d * (float(g) / labels.shape[0]),)


def softmax_cross_entropy(logits, labels) -> Tensor:
    """Mean negative log-likelihood of integer ``labels`` under row softmax."""
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.data.ndim != 2 or labels.shape != (logits.shape[0],):
        raise _shape_error("softmax_cross_entropy", logits.shape, labels.shape)
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    logp = z - logsum[:, None]
    value = np.asarray(-logp[np.arange(labels.shape[0]), labels].mean())
    probs = np.exp(logp)
    return emit("softmax_cross_entropy", value, (logits,),
                lambda g, needs: _xent_grad(g, probs, labels, needs))
