"""Central finite-difference gradient checking, independent of the tape."""
from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .autodiff import Tape, Tensor


def numerical_gradient(f: Callable[[], float], x: np.ndarray, eps: float = 1e-5, indices=None) -> np.ndarray:
    """``(f(x+eps) - f(x-eps)) / 2eps`` per entry of ``x`` (perturbed in place, then restored).

    ``indices`` restricts the check to a subset of flat positions; the other
    entries of the result are NaN.
    """
    flat = x.reshape(-1)
    out = np.full(flat.shape, np.nan) if indices is not None else np.empty(flat.shape)
    for i in (range(flat.size) if indices is None else indices):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f()
        flat[i] = orig - eps
        lo = f()
        flat[i] = orig
        out[i] = (hi - lo) / (2 * eps)
    return out.reshape(x.shape)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``||a - n|| / max(||a||, ||n||)``; 0 when both vanish."""
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


def check_gradients(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    eps: float = 1e-5,
    max_entries: int | None = None,
    rng: np.random.Generator | None = None,
) -> dict[str, float]:
    """Relative error between tape and finite-difference gradients per parameter.

    ``loss_fn`` must be deterministic. With ``max_entries`` a random subset of
    each tensor is compared.
    """
    with Tape() as tape:
        loss = loss_fn()
    names = list(params)
    analytic = tape.gradient(loss, [params[n] for n in names])

    def value() -> float:
        return float(loss_fn().data)

    errors = {}
    for name, grad in zip(names, analytic):
        data = params[name].data
        idx = None
        if max_entries is not None and data.size > max_entries:
            rng = rng or np.random.default_rng(0)
            idx = rng.choice(data.size, size=max_entries, replace=False)
        num = numerical_gradient(value, data, eps, idx)
        if idx is None:
            errors[name] = relative_error(grad, num)
        else:
            errors[name] = relative_error(grad.reshape(-1)[idx], num.reshape(-1)[idx])
    return errors
