"""Composite layers built from recorded primitives."""
from __future__ import annotations

from typing import Callable

import numpy as np

from . import ops
from .autodiff import ShapeError, Tensor, as_tensor


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def gcn_layer(adj, x, w, activation: Callable[[Tensor], Tensor] | None = None) -> Tensor:
    """``activation(adj @ x @ w)``.

    The product is associated as ``adj @ (x @ w)`` when that shrinks the
    sparse product (``w`` narrows the features), else ``(adj @ x) @ w``.
    """
    x, w = as_tensor(x), as_tensor(w)
    if x.data.ndim != 2 or w.data.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeError(f"gcn_layer: incompatible shapes {x.shape} and {w.shape}")
    if w.shape[1] < w.shape[0]:
        h = ops.spmm(adj, ops.matmul(x, w))
    else:
        h = ops.matmul(ops.spmm(adj, x), w)
    return activation(h) if activation is not None else h


def linear(x, w, b=None) -> Tensor:
    h = ops.matmul(x, w)
    return ops.add(h, b) if b is not None else h
