"""Per-robot task lists executed through the simulator."""
from __future__ import annotations

import numpy as np

from ..problem import ProblemInstance
from ..simulator import EpisodeResult, Simulator, run_episode
from .heuristics import myopic_choice


class PlanPolicy:
    """Each robot takes the first still-feasible task of its own list.

    When none of its listed tasks is feasible but others are, it falls back
    to the myopic rule.
    """

    def __init__(self, plan):
        self.plan = [list(p) for p in plan]

    def begin(self, instance: ProblemInstance):
        sim = Simulator(instance)
        queues = [list(p) for p in self.plan]

        def follow(state, robot):
            mask = sim.feasible_mask(state)
            own = queues[robot]
            while own and not mask[own[0]]:
                own.pop(0)
            task = own.pop(0) if own else myopic_choice(sim, state, robot)
            probs = np.zeros(mask.size)
            probs[task] = 1.0
            return probs

        return follow


def simulate_plan(instance: ProblemInstance, plan) -> EpisodeResult:
    return run_episode(instance, PlanPolicy(plan), mode="greedy")


def plan_from_result(instance: ProblemInstance, result: EpisodeResult) -> list[list[int]]:
    """Per-robot visit lists of an episode; never-visited tasks go to the end of robot 0's list."""
    plan = [[] for _ in range(instance.n_robots)]
    for d in result.decisions:
        plan[d.robot].append(d.task)
    seen = set(result.sequence)
    plan[0].extend(i for i in range(instance.n_tasks) if i not in seen)
    return plan
