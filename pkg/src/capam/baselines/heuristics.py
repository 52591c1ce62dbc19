"""Myopic, uniform-random and bipartite-matching (BiG-MRTA style) policies.

All of them act through the same simulator interface as the learned
policy: given the state at a decision event they return a distribution
over tasks (one-hot for the deterministic ones).
"""
from __future__ import annotations

import math

import numpy as np

from ..problem import ProblemInstance
from ..simulator import SimState, Simulator
from .matching import max_weight_matching

_SLACK_FLOOR = 1e-9


def _one_hot(n: int, i: int) -> np.ndarray:
    p = np.zeros(n)
    p[i] = 1.0
    return p


def myopic_choice(sim: Simulator, state: SimState, robot: int) -> int:
    """Urgency rule on ``ratio = (travel + service) / remaining slack``.

    Among tasks the robot can still finish on time (ratio <= 1) the most
    urgent one, i.e. the largest ratio, wins. If none can be finished on
    time, the smallest ratio (least late) is taken. Ties go to the lower index.
    """
    feasible = np.flatnonzero(sim.feasible_mask(state))
    if feasible.size == 0:
        raise ValueError("no feasible task")
    dist = np.hypot(*(sim.task_xy[feasible] - state.robot_xy[robot]).T)
    effort = dist / sim.speed + sim.workloads[feasible] / sim.capacities[robot]
    slack = np.maximum(sim.deadlines[feasible] - state.t, _SLACK_FLOOR)
    ratio = effort / slack
    on_time = ratio <= 1.0
    if on_time.any():
        return int(feasible[np.argmax(np.where(on_time, ratio, -1.0))])
    return int(feasible[np.argmin(ratio)])


class MyopicPolicy:
    name = "myopic"

    def begin(self, instance: ProblemInstance):
        sim = Simulator(instance)
        return lambda state, robot: _one_hot(instance.n_tasks, myopic_choice(sim, state, robot))


class RandomPolicy:
    """Uniform over the feasible tasks (pair with ``mode='sample'``)."""

    name = "random"

    def begin(self, instance: ProblemInstance):
        sim = Simulator(instance)

        def uniform(state, robot):
            mask = sim.feasible_mask(state)
            return mask / mask.sum()

        return uniform


def big_mrta_incentive(sim: Simulator, state: SimState, robot: int, task: int, lam: float | None = None) -> float:
    """Deadline-gated, exponentially time-discounted incentive of ``robot`` for ``task``.

    The robot is considered from the moment and place it becomes free. The
    weight is 0 when it cannot finish before the deadline, otherwise
    ``exp(-lam * (travel + service))`` with ``lam = 1 / d_max`` by default.
    """
    if lam is None:
        lam = 1.0 / float(sim.deadlines.max())
    start_t, start_xy = _availability(sim, state, robot)
    dx, dy = sim.task_xy[task] - start_xy
    effort = math.hypot(dx, dy) / sim.speed + sim.workloads[task] / sim.capacities[robot]
    if start_t + effort > sim.deadlines[task]:
        return 0.0
    return math.exp(-lam * effort)


def _availability(sim: Simulator, state: SimState, robot: int) -> tuple[float, np.ndarray]:
    dest = state.robot_dest[robot]
    if dest >= 0:
        return max(state.t, float(state.busy_until[robot])), sim.task_xy[dest]
    return state.t, state.robot_xy[robot]


def incentive_matrix(sim: Simulator, state: SimState, tasks: np.ndarray, lam: float | None = None) -> np.ndarray:
    """Robots x candidate-tasks incentive weights (vectorized :func:`big_mrta_incentive`)."""
    if lam is None:
        lam = 1.0 / float(sim.deadlines.max())
    m = sim.capacities.size
    W = np.zeros((m, tasks.size))
    for j in range(m):
        start_t, start_xy = _availability(sim, state, j)
        dist = np.hypot(*(sim.task_xy[tasks] - start_xy).T)
        effort = dist / sim.speed + sim.workloads[tasks] / sim.capacities[j]
        W[j] = np.where(start_t + effort <= sim.deadlines[tasks], np.exp(-lam * effort), 0.0)
    return W


def big_mrta_choice(sim: Simulator, state: SimState, robot: int) -> int:
    feasible = np.flatnonzero(sim.feasible_mask(state))
    W = incentive_matrix(sim, state, feasible)
    matched = dict(max_weight_matching(W))
    if robot in matched:
        return int(feasible[matched[robot]])
    return myopic_choice(sim, state, robot)


class BigMRTAPolicy:
    name = "bigmrta"

    def begin(self, instance: ProblemInstance):
        sim = Simulator(instance)
        return lambda state, robot: _one_hot(instance.n_tasks, big_mrta_choice(sim, state, robot))
