"""Named parameter sets with Adam state."""
from __future__ import annotations

from typing import Iterator, Mapping

import numpy as np

from .autodiff import ShapeError, Tensor


class ParamSet:
    """Ordered ``name -> Tensor`` mapping plus gradient buffers and Adam moments."""

    def __init__(self, arrays: Mapping[str, np.ndarray], trainable: bool = True):
        self.params: dict[str, Tensor] = {
            name: Tensor(np.array(a, dtype=np.float64), requires_grad=trainable, name=name)
            for name, a in arrays.items()
        }
        self.grads: dict[str, np.ndarray] = {n: np.zeros_like(t.data) for n, t in self.params.items()}
        self.m = {n: np.zeros_like(t.data) for n, t in self.params.items()}
        self.v = {n: np.zeros_like(t.data) for n, t in self.params.items()}
        self.step = 0

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.params)

    def __len__(self) -> int:
        return len(self.params)

    def items(self):
        return self.params.items()

    def arrays(self) -> dict[str, np.ndarray]:
        """Copies of the current parameter values."""
        return {n: t.data.copy() for n, t in self.params.items()}

    def load(self, arrays: Mapping[str, np.ndarray]) -> None:
        for n, a in arrays.items():
            t = self.params[n]
            if t.data.shape != np.shape(a):
                raise ShapeError(f"parameter {n!r}: expected shape {t.data.shape}, got {np.shape(a)}")
            t.data[...] = a

    def num_values(self) -> int:
        return int(sum(t.data.size for t in self.params.values()))

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g[...] = 0.0


def adam_step(
    params: ParamSet,
    grads: Mapping[str, np.ndarray] | None = None,
    lr: float = 1e-3,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> ParamSet:
    """One bias-corrected Adam update, in place; returns ``params``."""
    grads = params.grads if grads is None else grads
    for n, t in params.items():
        if grads[n].shape != t.data.shape:
            raise ShapeError(f"gradient for {n!r} has shape {grads[n].shape}, parameter {t.data.shape}")
    b1, b2 = betas
    params.step += 1
    bc1 = 1.0 - b1 ** params.step
    bc2 = 1.0 - b2 ** params.step
    for n, t in params.items():
        g = grads[n]
        m, v = params.m[n], params.v[n]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        t.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return params
