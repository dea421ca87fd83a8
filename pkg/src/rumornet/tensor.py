"""Minimal n-dimensional tensor with a reverse-mode gradient tape.

A :class:`Tensor` wraps a C-contiguous float64 ndarray (row-major, so the
flat buffer is the canonical data layout) plus an optional gradient buffer
of the same shape.  Operations in :mod:`rumornet.ops` record one backward
closure per primitive on a :class:`Tape`; replaying the tape in reverse
order accumulates d(loss)/d(input) into every input's ``grad``.

All math is 64-bit: the gradient checks this package leans on are not
trustworthy in float32.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import GradientError

Array = np.ndarray


class Tensor:
    """Dense float64 array with an optional gradient buffer."""

    __slots__ = ("data", "grad")

    def __init__(self, data, grad: Array | None = None):
        self.data: Array = np.ascontiguousarray(data, dtype=np.float64)
        self.grad: Array | None = grad

    @classmethod
    def zeros(cls, *shape: int) -> "Tensor":
        return cls(np.zeros(shape))

    @classmethod
    def scalar(cls, value: float) -> "Tensor":
        return cls(np.asarray(float(value)))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.item())

    def ensure_grad(self) -> Array:
        """Gradient buffer, created as zeros on first use."""
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        return self.grad

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def copy(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape})"


class Tape:
    """Ordered record of one forward pass.

    Ops append their backward closures as they execute, so the list is
    topologically ordered by construction; :func:`backward` replays it in
    exact reverse order.  A tape is single-writer and records exactly one
    forward pass.
    """

    __slots__ = ("_backs",)

    def __init__(self):
        self._backs: list[Callable[[], None]] = []

    def record(self, back: Callable[[], None]) -> None:
        self._backs.append(back)

    def __len__(self) -> int:
        return len(self._backs)


def backward(tape: Tape, loss: Tensor) -> None:
    """Populate ``grad`` of every tensor reachable from ``loss``.

    Tensors recorded on the tape but not ancestors of the loss keep a zero
    gradient.  The loss must be a scalar (a single value of any shape).
    """
    if loss.size != 1:
        raise GradientError(f"backward requires a scalar loss, got shape {loss.shape}")
    loss.ensure_grad()
    loss.grad.fill(1.0)
    for back in reversed(tape._backs):
        back()
