"""Layers built from the tape ops: affine maps, batch normalization, init."""
from __future__ import annotations

import numpy as np

from . import ops
from .tensor import DimensionError, Tensor, record

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def linear(x: Tensor, W: Tensor, b: Tensor | None = None) -> Tensor:
    """Row-wise affine map ``x @ W + b``."""
    if x.shape[-1] != W.shape[0]:
        raise DimensionError(f"linear: input width {x.shape[-1]} does not match weight {W.shape}")
    y = ops.matmul(x, W)
    if b is not None:
        if b.shape != (W.shape[1],):
            raise DimensionError(f"linear: bias {b.shape} does not match weight {W.shape}")
        y = ops.add(y, b)
    return y


class RunningStats:
    """Running mean/variance buffers of one batch-norm layer."""

    def __init__(self, width: int):
        self.mean = np.zeros(width)
        self.var = np.ones(width)

    def update(self, batch_mean: np.ndarray, batch_var: np.ndarray, momentum: float = BN_MOMENTUM) -> None:
        self.mean = (1.0 - momentum) * self.mean + momentum * batch_mean
        self.var = (1.0 - momentum) * self.var + momentum * batch_var

    def copy(self) -> "RunningStats":
        other = RunningStats(self.mean.size)
        other.mean = self.mean.copy()
        other.var = self.var.copy()
        return other


def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor, mode: str = "train",
               stats: RunningStats | None = None, eps: float = BN_EPS,
               momentum: float = BN_MOMENTUM) -> Tensor:
    """Normalize the columns of an ``n x d`` batch.

    ``train`` uses the batch statistics (and folds them into ``stats`` when
    given); ``eval`` uses ``stats``.
    """
    if x.data.ndim != 2 or x.shape[1] != gamma.shape[0] or gamma.shape != beta.shape:
        raise DimensionError(f"batch_norm: x {x.shape}, gamma {gamma.shape}, beta {beta.shape}")
    n = x.shape[0]
    if mode == "train":
        mu = x.data.mean(axis=0)
        var = x.data.var(axis=0)
        if stats is not None:
            unbiased = var * n / (n - 1) if n > 1 else var
            stats.update(mu, unbiased, momentum)
    elif mode == "eval":
        if stats is None:
            raise ValueError("batch_norm in eval mode needs running statistics")
        mu, var = stats.mean, stats.var
    else:
        raise ValueError(f"unknown batch_norm mode {mode!r}")

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv_std
    out = Tensor(xhat * gamma.data + beta.data)

    def backward(g):
        dgamma = (g * xhat).sum(axis=0)
        dbeta = g.sum(axis=0)
        dxhat = g * gamma.data
        if mode == "eval":
            dx = dxhat * inv_std
        else:
            dx = inv_std * (dxhat - dxhat.mean(axis=0) - xhat * (dxhat * xhat).mean(axis=0))
        return dx, dgamma, dbeta

    return record(out, (x, gamma, beta), backward)


def uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)
