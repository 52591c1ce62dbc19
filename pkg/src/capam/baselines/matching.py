from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def max_weight_matching(weights) -> list[tuple[int, int]]:
    """Maximum-total-weight matching of a non-negative ``rows x cols`` matrix.

    Returns ``(row, col)`` pairs sorted by row. Zero-weight edges are never
    part of the matching, so an all-zero matrix gives an empty list.
    """
    W = np.asarray(weights, dtype=float)
    if W.ndim != 2:
        raise ValueError(f"weights must be a matrix, got shape {W.shape}")
    if W.size == 0:
        return []
    if not np.all(np.isfinite(W)) or (W < 0).any():
        raise ValueError("weights must be finite and non-negative")
    rows, cols = linear_sum_assignment(W, maximize=True)
    return [(int(r), int(c)) for r, c in zip(rows, cols) if W[r, c] > 0]


def matching_weight(weights, matching) -> float:
    W = np.asarray(weights, dtype=float)
    return float(sum(W[r, c] for r, c in matching))
