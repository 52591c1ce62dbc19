from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tape, Tensor


def grad_check(f: Callable[[], Tensor], params: dict[str, Tensor], h: float = 1e-5,
               floor: float = 1e-6) -> float:
    """Max relative error between tape gradients and central differences.

    ``f`` closes over ``params`` and must be deterministic. Relative error
    uses ``max(|analytic|, |numeric|, floor)`` as the denominator so entries
    whose true gradient is zero are compared absolutely.
    """
    for p in params.values():
        p.grad = None
    with Tape() as tape:
        loss = f()
    tape.backward(loss)

    worst = 0.0
    for name, p in params.items():
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = float(f().data)
            flat[i] = orig - h
            down = float(f().data)
            flat[i] = orig
            numeric = (up - down) / (2.0 * h)
            a = float(analytic.reshape(-1)[i])
            err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, err)
    return worst
