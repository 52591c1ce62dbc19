"""Graph capsule encoder.

Each node's features are lifted by an affine map, then passed through
capsule layers. A capsule layer raises its input elementwise to the powers
``p = 1..P``, filters each moment with the Laplacian polynomial
``sum_k L^k (.) W_pk``, applies the nonlinearity and concatenates the P
blocks. A final affine map brings the width back to ``h_l``.
"""
from __future__ import annotations

import numpy as np

from . import numcore as nc
from .numcore import Tensor
from .taskgraph import TaskGraph


class EncoderConfigError(ValueError):
    pass


def _sigma(name: str):
    if name == "relu":
        return nc.relu
    if name == "identity":
        return lambda x: x
    if name == "tanh":
        return nc.tanh
    raise EncoderConfigError(f"unknown nonlinearity {name!r}")


def init_encoder_params(rng: np.random.Generator, n_features: int, h0: int, hl: int, K: int, P: int,
                        Le: int) -> dict[str, np.ndarray]:
    params = {
        "enc.W0": nc.uniform_init(rng, n_features, (n_features, h0)),
        "enc.b0": nc.uniform_init(rng, n_features, (h0,)),
    }
    width = h0
    for layer in range(1, Le + 1):
        for p in range(1, P + 1):
            for k in range(K + 1):
                params[f"enc.l{layer}.W_p{p}_k{k}"] = nc.uniform_init(rng, width, (width, hl))
        width = hl * P
    params["enc.Wf"] = nc.uniform_init(rng, width, (width, hl))
    params["enc.bf"] = nc.uniform_init(rng, width, (hl,))
    return params


def lift(X: Tensor, params: dict[str, Tensor]) -> Tensor:
    W0 = params["enc.W0"]
    if X.shape[-1] != W0.shape[0]:
        raise EncoderConfigError(f"node features have width {X.shape[-1]}, encoder expects {W0.shape[0]}")
    return nc.linear(X, W0, params["enc.b0"])


def capsule_layer(F_prev: Tensor, L_pows, weights: dict[tuple[int, int], Tensor], P: int,
                  sigma: str = "relu") -> Tensor:
    """One capsule layer; ``weights[(p, k)]`` is the filter for moment p and hop k."""
    if any(Lk.shape != (F_prev.shape[0], F_prev.shape[0]) for Lk in L_pows):
        raise nc.DimensionError(f"Laplacian powers do not match {F_prev.shape[0]} nodes")
    act = _sigma(sigma)
    blocks = []
    for p in range(1, P + 1):
        moment = nc.elementwise_power(F_prev, p)
        acc = None
        for k, Lk in enumerate(L_pows):
            term = nc.matmul(moment, weights[(p, k)])
            if k > 0:
                term = nc.matmul(Lk if isinstance(Lk, Tensor) else Tensor(Lk), term)
            acc = term if acc is None else nc.add(acc, term)
        blocks.append(act(acc))
    return nc.concat(blocks, axis=1)


def layer_weights(params: dict[str, Tensor], layer: int, P: int, K: int) -> dict[tuple[int, int], Tensor]:
    return {(p, k): params[f"enc.l{layer}.W_p{p}_k{k}"] for p in range(1, P + 1) for k in range(K + 1)}


def encode(graph: TaskGraph, params: dict[str, Tensor], K: int, P: int, Le: int,
           sigma: str = "relu") -> Tensor:
    """Node embeddings of shape ``N x h_l``."""
    if len(graph.L_pows) < K + 1:
        raise EncoderConfigError(f"graph carries {len(graph.L_pows) - 1} Laplacian powers, K={K} needs more")
    L_pows = [Tensor(Lk) for Lk in graph.L_pows[:K + 1]]
    F = lift(Tensor(graph.X), params)
    for layer in range(1, Le + 1):
        F = capsule_layer(F, L_pows, layer_weights(params, layer, P, K), P, sigma)
    return nc.linear(F, params["enc.Wf"], params["enc.bf"])
