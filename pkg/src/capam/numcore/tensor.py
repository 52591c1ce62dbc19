"""Dense tensors and a reverse-mode tape.

Operations record themselves on the innermost active :class:`Tape` when at
least one input requires a gradient. Outside a tape everything runs as
plain numpy, which is what rollouts use.
"""
from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np

_node_ids = itertools.count()
_active_tapes: list["Tape"] = []


class DimensionError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "node_id", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.node_id = next(_node_ids)
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    # operator sugar; the op functions live in ops.py
    def __add__(self, other):
        from . import ops
        return ops.add(self, as_tensor(other))

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, as_tensor(other))

    def __mul__(self, other):
        from . import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, float(other))
        return ops.mul(self, as_tensor(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class _Record:
    __slots__ = ("inputs", "output", "backward")

    def __init__(self, inputs, output, backward):
        self.inputs = inputs
        self.output = output
        self.backward = backward


class Tape:
    """Ordered log of differentiable operations.

    Use as a context manager; every op executed inside the block whose
    inputs need gradients is appended in execution order, so the list is
    topologically sorted by construction.
    """

    def __init__(self):
        self.records: list[_Record] = []

    def __enter__(self) -> "Tape":
        _active_tapes.append(self)
        return self

    def __exit__(self, *exc) -> None:
        popped = _active_tapes.pop()
        assert popped is self

    def __len__(self) -> int:
        return len(self.records)

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into ``.grad`` of every leaf that requires it."""
        if loss.data.size != 1:
            raise DimensionError(f"backward needs a scalar loss, got shape {loss.shape}")
        grads: dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.data)}
        produced = {rec.output.node_id for rec in self.records}
        for rec in reversed(self.records):
            g_out = grads.pop(rec.output.node_id, None)
            if g_out is None:
                continue
            for inp, g in zip(rec.inputs, rec.backward(g_out)):
                if g is None or not inp.requires_grad:
                    continue
                if inp.node_id in grads:
                    grads[inp.node_id] = grads[inp.node_id] + g
                else:
                    grads[inp.node_id] = g
                if inp.node_id not in produced:
                    inp.grad = g.copy() if inp.grad is None else inp.grad + g


def record(output: Tensor, inputs: Sequence[Tensor],
           backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]) -> Tensor:
    """Register ``output`` on the active tape if any input needs a gradient."""
    if _active_tapes and any(t.requires_grad for t in inputs):
        output.requires_grad = True
        _active_tapes[-1].records.append(_Record(tuple(inputs), output, backward))
    return output


def grad_enabled() -> bool:
    return bool(_active_tapes)
