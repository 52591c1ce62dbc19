from __future__ import annotations

import math

import numpy as np


def select(probs: np.ndarray, mode: str = "greedy", rng: np.random.Generator | None = None) -> tuple[int, float]:
    """Pick a task index from a probability vector and return it with its log-probability.

    Greedy takes the argmax (lowest index on ties); sample draws by inverse CDF
    so zero-probability entries can never be chosen.
    """
    probs = np.asarray(probs, dtype=float)
    if mode == "greedy":
        idx = int(np.argmax(probs))
    elif mode == "sample":
        if rng is None:
            raise ValueError("sample mode needs a random generator")
        cdf = np.cumsum(probs)
        idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        if idx >= probs.size or probs[idx] <= 0:
            idx = int(np.flatnonzero(probs > 0)[-1])
    else:
        raise ValueError(f"unknown selection mode {mode!r}")
    return idx, math.log(probs[idx])
