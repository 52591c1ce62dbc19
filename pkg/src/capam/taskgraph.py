"""Complete weighted task graph over normalized node features."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import MAX_WORKLOAD, InstanceValidationError, ProblemInstance, TaskNode


def normalize_features(tasks, grid: float, d_max: float, with_workload: bool = False) -> np.ndarray:
    """Rows ``[x/grid, y/grid, d/d_max]`` (plus ``w/30`` when ``with_workload``)."""
    if grid <= 0 or d_max <= 0:
        raise InstanceValidationError("grid and d_max must be positive")
    rows = []
    for i, t in enumerate(tasks):
        if not (0 <= t.x <= grid and 0 <= t.y <= grid):
            raise InstanceValidationError(f"task {i} lies outside the {grid}x{grid} grid")
        if t.deadline > d_max:
            raise InstanceValidationError(f"task {i} deadline {t.deadline} exceeds d_max {d_max}")
        row = [t.x / grid, t.y / grid, t.deadline / d_max]
        if with_workload:
            row.append(t.workload / MAX_WORKLOAD)
        rows.append(row)
    return np.array(rows, dtype=float).reshape(len(rows), 4 if with_workload else 3)


def adjacency(X: np.ndarray) -> np.ndarray:
    """``alpha_ij = 1 / (1 + ||X_i - X_j||)`` off the diagonal, zero on it."""
    diff = X[:, None, :] - X[None, :, :]
    A = 1.0 / (1.0 + np.sqrt((diff * diff).sum(axis=-1)))
    np.fill_diagonal(A, 0.0)
    return A


def laplacian(A: np.ndarray) -> np.ndarray:
    return np.diag(A.sum(axis=1)) - A


def laplacian_powers(A: np.ndarray, K: int) -> list[np.ndarray]:
    """``[I, L, L^2, ..., L^K]`` by repeated multiplication."""
    if K < 0:
        raise ValueError("K must be non-negative")
    L = laplacian(A)
    pows = [np.eye(A.shape[0])]
    for _ in range(K):
        pows.append(pows[-1] @ L)
    return pows


@dataclass(frozen=True)
class TaskGraph:
    X: np.ndarray
    A: np.ndarray
    D: np.ndarray
    L: np.ndarray
    L_pows: tuple[np.ndarray, ...]

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @classmethod
    def from_features(cls, X: np.ndarray, K: int) -> "TaskGraph":
        A = adjacency(X)
        D = np.diag(A.sum(axis=1))
        return cls(X, A, D, D - A, tuple(laplacian_powers(A, K)))

    @classmethod
    def from_instance(cls, instance: ProblemInstance, K: int, with_workload: bool = False) -> "TaskGraph":
        X = normalize_features(instance.tasks, instance.grid, instance.d_max, with_workload)
        return cls.from_features(X, K)


__all__ = ["TaskGraph", "TaskNode", "adjacency", "laplacian", "laplacian_powers", "normalize_features"]
