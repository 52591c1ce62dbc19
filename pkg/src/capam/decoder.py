"""Context-conditioned multi-head attention decoder.

Node embeddings give keys and values; the deciding robot's context gives
the query. The glimpse produced by multi-head attention goes through a
residual feed-forward block and batch normalization, and is then scored
against every node key with a clipped compatibility to give logits.
Decisions are processed as a batch of ``T`` query rows so a whole recorded
episode can be re-scored in one pass.
"""
from __future__ import annotations

import math

import numpy as np

from . import numcore as nc
from .numcore import NoFeasibleActionError, RunningStats, Tensor
from .problem import MAX_CAPACITY, ProblemInstance
from .selection import select
from .simulator import PolicyError, SimState

CONTEXT_WIDTH = 8
REFERENCE_PEERS = 6  # largest peer count in the training distribution (7 robots)
LOGIT_CLIP = 10.0


class DecoderConfigError(ValueError):
    pass


def build_context(instance: ProblemInstance, state: SimState, robot: int) -> np.ndarray:
    """Fixed-width context for ``robot``.

    ``[t/d_max, c/3, x/grid, y/grid, mean peer destination x, y, mean peer c/3, peers/6]``.
    Idle peers count with their current location as destination. With no
    peers the peer block repeats the decider's own values and the count is 0.
    """
    grid, caps = instance.grid, instance.capacities
    xy = state.robot_xy
    own = xy[robot] / grid
    peers = [j for j in range(instance.n_robots) if j != robot]
    if peers:
        dest = np.array([instance.task_xy[state.robot_dest[j]] if state.robot_dest[j] >= 0 else xy[j]
                         for j in peers])
        peer_xy = dest.mean(axis=0) / grid
        peer_cap = caps[peers].mean() / MAX_CAPACITY
    else:
        peer_xy, peer_cap = own, caps[robot] / MAX_CAPACITY
    return np.array([state.t / instance.d_max, caps[robot] / MAX_CAPACITY, own[0], own[1],
                     peer_xy[0], peer_xy[1], peer_cap, len(peers) / REFERENCE_PEERS])


def init_decoder_params(rng: np.random.Generator, hl: int, hq: int = CONTEXT_WIDTH) -> dict[str, np.ndarray]:
    u = nc.uniform_init
    return {
        "dec.Wk": u(rng, hl, (hl, hl)),
        "dec.Wv": u(rng, hl, (hl, hl)),
        "dec.Wq": u(rng, hq, (hq, hl)),
        "dec.bq": u(rng, hq, (hl,)),
        "dec.Wo": u(rng, hl, (hl, hl)),
        "dec.ff1_W": u(rng, hl, (hl, hl)),
        "dec.ff1_b": u(rng, hl, (hl,)),
        "dec.ff2_W": u(rng, hl, (hl, hl)),
        "dec.ff2_b": u(rng, hl, (hl,)),
        "dec.bn_gamma": np.ones(hl),
        "dec.bn_beta": np.zeros(hl),
    }


def _broadcast_mask(mask, shape) -> np.ndarray | None:
    if mask is None:
        return None
    return np.broadcast_to(np.asarray(mask, dtype=bool), shape)


def attention(Q: Tensor, keys: Tensor, values: Tensor, mask=None) -> Tensor:
    """Scaled dot-product attention of query rows over node keys/values.

    ``Q`` is ``T x d``, ``keys``/``values`` are ``N x d``; the scale is the key
    width ``d``. Masked nodes get zero weight.
    """
    d = keys.shape[-1]
    scores = nc.scale(nc.matmul(Q, nc.transpose(keys)), 1.0 / math.sqrt(d))
    weights = nc.softmax(scores, _broadcast_mask(mask, scores.shape))
    return nc.matmul(weights, values)


def mha(Q: Tensor, keys: Tensor, values: Tensor, Wo: Tensor, n_heads: int, mask=None) -> Tensor:
    """Multi-head attention: per-head slices of width ``d / n_heads``, concatenated, then ``Wo``."""
    T, d = Q.shape
    N = keys.shape[0]
    if d % n_heads:
        raise DecoderConfigError(f"embedding width {d} is not divisible by {n_heads} heads")
    dh = d // n_heads
    Qh = nc.reshape(Q, (T, n_heads, dh))
    Kh = nc.reshape(keys, (N, n_heads, dh))
    Vh = nc.reshape(values, (N, n_heads, dh))
    scores = nc.scale(nc.einsum("thd,nhd->thn", Qh, Kh), 1.0 / math.sqrt(dh))
    m = None if mask is None else np.atleast_2d(np.asarray(mask, dtype=bool))[:, None, :]
    weights = nc.softmax(scores, _broadcast_mask(m, scores.shape))
    heads = nc.einsum("thn,nhd->thd", weights, Vh)
    return nc.matmul(nc.reshape(heads, (T, d)), Wo)


def project_nodes(embeddings: Tensor, params: dict[str, Tensor]) -> tuple[Tensor, Tensor]:
    return nc.matmul(embeddings, params["dec.Wk"]), nc.matmul(embeddings, params["dec.Wv"])


def decode_logits(keys: Tensor, values: Tensor, contexts: np.ndarray, masks: np.ndarray,
                  params: dict[str, Tensor], stats: RunningStats, n_heads: int, bn_mode: str = "eval",
                  clip: float = LOGIT_CLIP, collect: list | None = None) -> Tensor:
    """Masked log-probabilities (``T x N``) for a batch of decision contexts."""
    masks = np.asarray(masks, dtype=bool)
    if not masks.any(axis=-1).all():
        raise NoFeasibleActionError("a decision has no feasible task")
    Q = nc.linear(Tensor(np.atleast_2d(contexts)), params["dec.Wq"], params["dec.bq"])
    g = mha(Q, keys, values, params["dec.Wo"], n_heads, masks)
    hidden = nc.relu(nc.linear(g, params["dec.ff1_W"], params["dec.ff1_b"]))
    g = nc.add(g, nc.linear(hidden, params["dec.ff2_W"], params["dec.ff2_b"]))
    if collect is not None:
        collect.append(g.data.copy())
    g = nc.batch_norm(g, params["dec.bn_gamma"], params["dec.bn_beta"], bn_mode, stats)
    compat = nc.scale(nc.matmul(g, nc.transpose(keys)), 1.0 / math.sqrt(keys.shape[-1]))
    logits = nc.scale(nc.tanh(compat), clip)
    if not np.all(np.isfinite(logits.data)):
        raise PolicyError("non-finite logits")
    return nc.log_softmax(logits, masks)


def action_distribution(keys: Tensor, values: Tensor, context: np.ndarray, mask: np.ndarray,
                        params: dict[str, Tensor], stats: RunningStats, n_heads: int,
                        clip: float = LOGIT_CLIP) -> np.ndarray:
    """Selection probabilities over all tasks for one decision (eval-mode batch norm)."""
    logp = decode_logits(keys, values, context[None, :], np.asarray(mask)[None, :], params, stats,
                         n_heads, "eval", clip)
    probs = np.exp(logp.data[0])
    probs[~np.asarray(mask, dtype=bool)] = 0.0
    return probs


__all__ = ["CONTEXT_WIDTH", "action_distribution", "attention", "build_context", "decode_logits",
           "init_decoder_params", "mha", "project_nodes", "select"]
