"""Problem instances: tasks with deadlines/workloads and robots with capacities."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

GRID = 100.0
SPEED = 1.0
MAX_CAPACITY = 3.0
MAX_WORKLOAD = 30.0


class InstanceValidationError(ValueError):
    pass


@dataclass(frozen=True)
class TaskNode:
    x: float
    y: float
    deadline: float
    workload: float


@dataclass(frozen=True)
class Robot:
    x: float
    y: float
    capacity: float


@dataclass(frozen=True)
class ProblemInstance:
    tasks: tuple[TaskNode, ...]
    robots: tuple[Robot, ...]
    speed: float = SPEED
    grid: float = GRID
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "robots", tuple(self.robots))

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def n_robots(self) -> int:
        return len(self.robots)

    @cached_property
    def task_xy(self) -> np.ndarray:
        return np.array([[t.x, t.y] for t in self.tasks], dtype=float).reshape(-1, 2)

    @cached_property
    def deadlines(self) -> np.ndarray:
        return np.array([t.deadline for t in self.tasks], dtype=float)

    @cached_property
    def workloads(self) -> np.ndarray:
        return np.array([t.workload for t in self.tasks], dtype=float)

    @cached_property
    def robot_xy(self) -> np.ndarray:
        return np.array([[r.x, r.y] for r in self.robots], dtype=float).reshape(-1, 2)

    @cached_property
    def capacities(self) -> np.ndarray:
        return np.array([r.capacity for r in self.robots], dtype=float)

    @cached_property
    def d_max(self) -> float:
        return float(max(t.deadline for t in self.tasks))

    def validate(self) -> None:
        if not self.tasks:
            raise InstanceValidationError("instance has no tasks")
        if not self.robots:
            raise InstanceValidationError("instance has no robots")
        if not self.speed > 0 or not self.grid > 0:
            raise InstanceValidationError(f"speed and grid must be positive (got {self.speed}, {self.grid})")
        for i, t in enumerate(self.tasks):
            if not (0 <= t.x <= self.grid and 0 <= t.y <= self.grid):
                raise InstanceValidationError(f"task {i} at ({t.x}, {t.y}) lies outside the grid")
            if not t.deadline > 0 or not t.workload > 0:
                raise InstanceValidationError(f"task {i} needs positive deadline and workload")
        for j, r in enumerate(self.robots):
            if not (0 <= r.x <= self.grid and 0 <= r.y <= self.grid):
                raise InstanceValidationError(f"robot {j} at ({r.x}, {r.y}) lies outside the grid")
            if not 1.0 <= r.capacity <= MAX_CAPACITY:
                raise InstanceValidationError(f"robot {j} capacity {r.capacity} outside [1, 3]")

    def permuted(self, perm) -> "ProblemInstance":
        """Same instance with task ``k`` of the result equal to task ``perm[k]`` of this one."""
        return ProblemInstance(tuple(self.tasks[i] for i in perm), self.robots, self.speed, self.grid,
                               dict(self.metadata))
