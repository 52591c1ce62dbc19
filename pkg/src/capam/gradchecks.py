"""Finite-difference checks of the tape gradients, from single ops to the full policy."""
from __future__ import annotations

import numpy as np

from . import numcore as nc
from .instances import generate_instance
from .model import CapAM, ModelConfig
from .simulator import run_episode
from .trainer import reinforce_loss

TOLERANCE = 1e-4


def _leaf(rng, shape, lo=-1.0, hi=1.0):
    return nc.Tensor(rng.uniform(lo, hi, size=shape), requires_grad=True)


def op_checks(seed: int = 0) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    out = {}

    a, b = _leaf(rng, (3, 4)), _leaf(rng, (4, 2))
    out["matmul"] = nc.grad_check(lambda: nc.tsum(nc.tanh(nc.matmul(a, b))), {"a": a, "b": b})

    x = _leaf(rng, (3, 3))
    out["elementwise_power"] = nc.grad_check(lambda: nc.tsum(nc.elementwise_power(x, 3)), {"x": x})

    z = _leaf(rng, (2, 5))
    w = nc.Tensor(rng.uniform(-1, 1, size=(2, 5)))
    mask = np.array([[1, 0, 1, 1, 0], [1, 1, 1, 1, 1]], dtype=bool)
    out["softmax"] = nc.grad_check(lambda: nc.tsum(nc.mul(nc.softmax(z, mask), w)), {"z": z})
    out["log_softmax"] = nc.grad_check(lambda: nc.tsum(nc.take(nc.log_softmax(z, mask), (np.array([0, 1]), np.array([2, 4])))), {"z": z})

    xl, W, bias = _leaf(rng, (4, 3)), _leaf(rng, (3, 2)), _leaf(rng, (2,))
    out["linear"] = nc.grad_check(lambda: nc.tsum(nc.linear(xl, W, bias)), {"x": xl, "W": W, "b": bias})

    xb, gamma, beta = _leaf(rng, (5, 3)), _leaf(rng, (3,)), _leaf(rng, (3,))
    c = nc.Tensor(rng.uniform(-1, 1, size=(5, 3)))
    out["batch_norm"] = nc.grad_check(lambda: nc.tsum(nc.mul(nc.batch_norm(xb, gamma, beta, "train"), c)),
                                      {"x": xb, "gamma": gamma, "beta": beta})

    q, k = _leaf(rng, (2, 2, 3)), _leaf(rng, (4, 2, 3))
    out["einsum"] = nc.grad_check(lambda: nc.tsum(nc.tanh(nc.einsum("thd,nhd->thn", q, k))), {"q": q, "k": k})
    return out


def pipeline_check(seed: int = 0) -> float:
    """Gradient of an advantage-weighted episode log-probability through encoder and decoder.

    Tiny net (K=2, P=3, L_e=1, width 8, 2 heads) on a 4-task, 2-robot instance.
    """
    rng = np.random.default_rng(seed)
    instance = generate_instance(4, 2, rng)
    model = CapAM(ModelConfig(h0=8, h_l=8, K=2, P=3, L_e=1, h_e=2), seed=seed)
    model.bn_stats.mean = rng.normal(0, 0.1, size=8)
    model.bn_stats.var = rng.uniform(0.5, 1.5, size=8)
    result = run_episode(instance, model, "sample", seed=seed)
    inputs = model.decision_inputs(instance, result.actions)

    def loss():
        lp = model.episode_log_prob(instance, result.actions, inputs=inputs)
        return reinforce_loss([lp], [result.f_cost + 0.7], [result.f_cost])

    return nc.grad_check(loss, model.params)


def run_all(seed: int = 0) -> dict[str, float]:
    out = op_checks(seed)
    out["pipeline"] = pipeline_check(seed)
    return out
