"""Tensors and the tape that records primitive ops for reverse-mode gradients."""
from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

_ACTIVE_TAPES: list["Tape"] = []
_DEBUG = False


class ShapeError(ValueError):
    pass


class GradientError(RuntimeError):
    pass


class NumericalError(FloatingPointError):
    pass


def set_debug(flag: bool) -> None:
    """Check every forward output for non-finite values."""
    global _DEBUG
    _DEBUG = bool(flag)


class Tensor:
    """Float64 array with a flag saying whether gradients should reach it."""

    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Record(NamedTuple):
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Tape:
    """Records ops executed inside ``with tape:``; replays them backwards.

    Only ops with at least one input that requires grad are recorded.
    """

    def __init__(self):
        self.records: list[Record] = []
        self._paused = 0

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE_TAPES.remove(self)
        return False

    @property
    def recording(self) -> bool:
        return self._paused == 0

    @contextmanager
    def stop_recording(self):
        self._paused += 1
        try:
            yield
        finally:
            self._paused -= 1

    def gradient(self, loss: Tensor, sources: Sequence[Tensor]) -> list[np.ndarray]:
        """d loss / d source for each source; zeros where no path exists."""
        if loss.data.size != 1:
            raise GradientError(f"loss must be a scalar, got shape {loss.shape}")
        keep = {id(s) for s in sources}
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for rec in reversed(self.records):
            oid = id(rec.output)
            g = grads.get(oid) if oid in keep else grads.pop(oid, None)
            if g is None:
                continue
            for t, gi in zip(rec.inputs, rec.backward(g)):
                if gi is None or not t.requires_grad:
                    continue
                tid = id(t)
                if tid in grads:
                    grads[tid] = grads[tid] + gi
                else:
                    grads[tid] = gi
        return [grads.get(id(s), np.zeros_like(s.data)) for s in sources]


@contextmanager
def no_record():
    """Suspend recording on every active tape."""
    tapes = list(_ACTIVE_TAPES)
    for t in tapes:
        t._paused += 1
    try:
        yield
    finally:
        for t in tapes:
            t._paused -= 1


def emit(op: str, out: np.ndarray, inputs: tuple[Tensor, ...], backward) -> Tensor:
    """Wrap a forward result and record it on active tapes when needed.

    ``backward(g, needs)`` receives the upstream gradient and a tuple of
    flags telling which inputs want a gradient.
    """
    if _DEBUG and not np.all(np.isfinite(out)):
        raise NumericalError(f"{op} produced non-finite values")
    tapes = [t for t in _ACTIVE_TAPES if t.recording]
    needs = tuple(t.requires_grad for t in inputs)
    result = Tensor(out, requires_grad=bool(tapes) and any(needs))
    if result.requires_grad:
        rec = Record(op, inputs, result, lambda g: backward(g, needs))
        for t in tapes:
            t.records.append(rec)
    return result


def backward(tape: Tape, loss: Tensor, *param_sets) -> dict[str, np.ndarray]:
    """Gradients of ``loss`` for every tensor in the given parameter sets.

    Each set is a mapping ``name -> Tensor`` (a ``ParamSet`` also stores the
    result in its ``grads`` buffer). Parameters with no path to the loss, or
    that do not require grad, receive exact zeros.
    """
    groups = [list(ps.items()) for ps in param_sets]
    flat = [t for items in groups for _, t in items]
    grads = iter(tape.gradient(loss, flat))  # one reverse sweep for every set
    out: dict[str, np.ndarray] = {}
    for ps, items in zip(param_sets, groups):
        mine = {name: next(grads) for name, _ in items}
        out.update(mine)
        if hasattr(ps, "grads"):
            ps.grads = mine
    return out
