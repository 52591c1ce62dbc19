from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..problem import ProblemInstance
from ..simulator import COMPLETED, MISSED, EpisodeResult, SimState, Simulator, replay


class OracleSizeError(ValueError):
    pass


@dataclass
class OracleSolution:
    f_cost: float
    actions: list[int]
    result: EpisodeResult
    leaves: int


def _committed_cost(sim: Simulator, state: SimState) -> float:
    """Penalty already fixed: missed tasks, late completions and late claimed arrivals."""
    d = sim.deadlines
    cost = float((state.status == MISSED).sum())
    late = (state.status == COMPLETED) & (state.t_f > d)
    cost += float((state.t_f[late] / d[late]).sum())
    for r, task in enumerate(state.robot_dest):
        if task >= 0 and state.busy_until[r] > d[task]:
            cost += state.busy_until[r] / d[task]
    return cost


def exhaustive_oracle(instance: ProblemInstance, max_tasks: int = 8, max_robots: int = 2) -> OracleSolution:
    """Minimum episode cost over every sequence of decisions the simulator allows.

    Branches on every feasible task at every decision event (this covers all
    task-to-robot assignments and orderings that can actually be executed)
    with branch-and-bound on the already committed penalty.
    """
    if instance.n_tasks > max_tasks or instance.n_robots > max_robots:
        raise OracleSizeError(f"oracle limited to {max_tasks} tasks and {max_robots} robots, got "
                              f"{instance.n_tasks} and {instance.n_robots}")
    sim = Simulator(instance)
    best_cost = math.inf
    best_actions: list[int] = []
    leaves = 0

    def dfs(state: SimState, actions: list[int]) -> None:
        nonlocal best_cost, best_actions, leaves
        if state.done:
            leaves += 1
            cost, _ = sim.episode_cost(state)
            if cost < best_cost:
                best_cost, best_actions = cost, list(actions)
            return
        if best_cost == 0.0 or _committed_cost(sim, state) >= best_cost:
            return
        robot = state.decider
        for task in np.flatnonzero(sim.feasible_mask(state)):
            actions.append(int(task))
            dfs(sim.step(state, robot, int(task)), actions)
            actions.pop()

    dfs(sim.reset(), [])
    result = replay(instance, best_actions)
    return OracleSolution(best_cost, best_actions, result, leaves)
