"""Differentiable operations over :class:`Tensor`.

Each op computes its forward value with numpy and registers a backward
rule that maps the output gradient to one gradient per input.
"""
from __future__ import annotations

import numpy as np

from .tensor import DimensionError, Tensor, as_tensor, record


class NoFeasibleActionError(RuntimeError):
    """Every entry of a masked distribution was masked out."""


def _check_same(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; ``b`` may also be a row vector added to every row of ``a``."""
    if a.shape == b.shape:
        out = Tensor(a.data + b.data)
        return record(out, (a, b), lambda g: (g, g))
    if _is_row_bias(a, b):
        out = Tensor(a.data + b.data)
        return record(out, (a, b), lambda g: (g, g.reshape(-1, b.shape[-1]).sum(axis=0).reshape(b.shape)))
    raise DimensionError(f"add: shapes {a.shape} and {b.shape} are incompatible")


def _is_row_bias(a: Tensor, b: Tensor) -> bool:
    return b.data.ndim == 1 and a.data.ndim >= 1 and a.shape[-1] == b.shape[0]


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same(a, b, "sub")
    out = Tensor(a.data - b.data)
    return record(out, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same(a, b, "mul")
    out = Tensor(a.data * b.data)
    return record(out, (a, b), lambda g: (g * b.data, g * a.data))


def scale(a: Tensor, c: float) -> Tensor:
    out = Tensor(a.data * c)
    return record(out, (a,), lambda g: (g * c,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of ``m x k`` and ``k x n`` (a 1-D left operand is a row)."""
    a, b = as_tensor(a), as_tensor(b)
    if b.data.ndim != 2 or a.data.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    out = Tensor(a.data @ b.data)

    def backward(g):
        if a.data.ndim == 1:
            return g @ b.data.T, np.outer(a.data, g)
        return g @ b.data.T, a.data.T @ g

    return record(out, (a, b), backward)


def einsum(subscripts: str, a: Tensor, b: Tensor) -> Tensor:
    """Two-operand einsum; every index of an operand must appear in the output or the other operand."""
    lhs, out_idx = subscripts.replace(" ", "").split("->")
    ia, ib = lhs.split(",")
    for own, other in ((ia, ib), (ib, ia)):
        if len(set(own)) != len(own) or any(c not in out_idx and c not in other for c in own):
            raise DimensionError(f"einsum: unsupported subscripts {subscripts!r}")
    try:
        out = Tensor(np.einsum(subscripts, a.data, b.data))
    except ValueError as exc:
        raise DimensionError(f"einsum {subscripts!r}: shapes {a.shape}, {b.shape}: {exc}") from None

    def backward(g):
        return (np.einsum(f"{out_idx},{ib}->{ia}", g, b.data),
                np.einsum(f"{out_idx},{ia}->{ib}", g, a.data))

    return record(out, (a, b), backward)


def elementwise_power(a: Tensor, p: int) -> Tensor:
    """Raise every entry to the integer power ``p >= 1``."""
    if int(p) != p or p < 1:
        raise ValueError(f"elementwise_power needs an integer p >= 1, got {p}")
    p = int(p)
    if p == 1:
        return a
    out = Tensor(a.data ** p)
    return record(out, (a,), lambda g: (g * p * a.data ** (p - 1),))


def relu(a: Tensor) -> Tensor:
    pos = a.data > 0
    out = Tensor(np.where(pos, a.data, 0.0))
    return record(out, (a,), lambda g: (g * pos,))


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = Tensor(y)
    return record(out, (a,), lambda g: (g * (1.0 - y * y),))


def exp(a: Tensor) -> Tensor:
    y = np.exp(a.data)
    out = Tensor(y)
    return record(out, (a,), lambda g: (g * y,))


def log(a: Tensor) -> Tensor:
    out = Tensor(np.log(a.data))
    return record(out, (a,), lambda g: (g / a.data,))


def sum(a: Tensor) -> Tensor:  # noqa: A001 - mirrors numpy naming
    out = Tensor(a.data.sum())
    return record(out, (a,), lambda g: (np.broadcast_to(g, a.shape).copy(),))


def mean(a: Tensor) -> Tensor:
    n = a.data.size
    out = Tensor(a.data.mean())
    return record(out, (a,), lambda g: (np.full(a.shape, float(g) / n),))


def reshape(a: Tensor, shape) -> Tensor:
    out = Tensor(a.data.reshape(shape))
    return record(out, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor) -> Tensor:
    out = Tensor(a.data.T)
    return record(out, (a,), lambda g: (g.T,))


def concat(parts: list[Tensor], axis: int = -1) -> Tensor:
    """Concatenate along ``axis`` (columns by default)."""
    if len(parts) == 1:
        return parts[0]
    sizes = [p.shape[axis] for p in parts]
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis))
    bounds = np.cumsum(sizes)[:-1]
    return record(out, parts, lambda g: tuple(np.split(g, bounds, axis=axis)))


def take(a: Tensor, index) -> Tensor:
    """Basic/advanced indexing ``a[index]`` with scatter-add backward."""
    out = Tensor(a.data[index])

    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        return (full,)

    return record(out, (a,), backward)


def _prepare_mask(logits: np.ndarray, mask) -> np.ndarray:
    feasible = np.ones(logits.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if feasible.shape != logits.shape:
        raise DimensionError(f"mask shape {feasible.shape} does not match logits {logits.shape}")
    if not feasible.any(axis=-1).all():
        raise NoFeasibleActionError("every entry is masked")
    return feasible


def log_softmax(logits: Tensor, mask=None) -> Tensor:
    """Masked log-softmax over the last axis; masked entries are ``-inf``."""
    feasible = _prepare_mask(logits.data, mask)
    z = np.where(feasible, logits.data, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    y = z - lse
    probs = np.exp(y)

    def backward(g):
        g = np.where(feasible, g, 0.0)
        return (g - probs * g.sum(axis=-1, keepdims=True),)

    return record(Tensor(y), (logits,), backward)


def softmax(logits: Tensor, mask=None) -> Tensor:
    """Masked, max-shifted softmax over the last axis; masked entries are exactly 0."""
    feasible = _prepare_mask(logits.data, mask)
    z = np.where(feasible, logits.data, -np.inf)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return record(Tensor(y), (logits,), backward)
