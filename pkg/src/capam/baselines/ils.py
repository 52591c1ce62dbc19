"""Generic iterated local search over per-robot task lists.

Local search applies best-improvement relocate and swap moves, each scored
by simulating the plan. Perturbation reverses a random segment of one list
and moves a random task to another robot. The best plan seen is kept.
"""
from __future__ import annotations

import time

import numpy as np

from ..problem import ProblemInstance
from ..simulator import EpisodeResult, run_episode
from .heuristics import MyopicPolicy
from .plans import plan_from_result, simulate_plan


class _Budget:
    def __init__(self, seconds: float | None):
        self.deadline = None if seconds is None else time.perf_counter() + seconds

    def out(self) -> bool:
        return self.deadline is not None and time.perf_counter() >= self.deadline


def _neighbours(plan):
    """Relocate every task to every other slot, then swap every pair of tasks."""
    slots = [(r, i) for r, seq in enumerate(plan) for i in range(len(seq))]
    for r, i in slots:
        task = plan[r][i]
        for r2 in range(len(plan)):
            limit = len(plan[r2]) + (0 if r2 == r else 1)
            for j in range(limit):
                if r2 == r and j == i:
                    continue
                new = [list(s) for s in plan]
                del new[r][i]
                new[r2].insert(j, task)
                yield new
    for a in range(len(slots)):
        for b in range(a + 1, len(slots)):
            (r1, i1), (r2, i2) = slots[a], slots[b]
            new = [list(s) for s in plan]
            new[r1][i1], new[r2][i2] = new[r2][i2], new[r1][i1]
            yield new


def local_search(instance, plan, cost, budget: _Budget):
    while not budget.out() and cost > 0:
        best_plan, best_cost = None, cost
        for cand in _neighbours(plan):
            c = simulate_plan(instance, cand).f_cost
            if c < best_cost:
                best_plan, best_cost = cand, c
            if budget.out():
                break
        if best_plan is None:
            break
        plan, cost = best_plan, best_cost
    return plan, cost


def perturb(plan, rng: np.random.Generator):
    new = [list(s) for s in plan]
    nonempty = [r for r, s in enumerate(new) if len(s) >= 2]
    if nonempty:
        r = nonempty[rng.integers(len(nonempty))]
        i, j = sorted(rng.choice(len(new[r]), size=2, replace=False))
        new[r][i:j + 1] = new[r][i:j + 1][::-1]
    if len(new) > 1:
        src = [r for r, s in enumerate(new) if s]
        r = src[rng.integers(len(src))]
        task = new[r].pop(int(rng.integers(len(new[r]))))
        dst = int(rng.integers(len(new) - 1))
        dst = dst + 1 if dst >= r else dst
        new[dst].insert(int(rng.integers(len(new[dst]) + 1)), task)
    return new


def iterated_local_search(instance: ProblemInstance, time_budget: float = 1.0, seed: int = 0,
                          max_iters: int | None = None, history: list | None = None) -> EpisodeResult:
    """Best episode found within ``time_budget`` seconds (or ``max_iters`` perturbations).

    Starts from the myopic policy's plan. Stops early once the cost hits 0.
    With a wall-clock budget the iteration count, and so possibly the result,
    depends on machine speed; ``max_iters`` with ``time_budget=None`` is fully
    deterministic.
    """
    if time_budget is not None and time_budget <= 0:
        raise ValueError("time budget must be positive")
    budget = _Budget(time_budget)
    rng = np.random.default_rng(seed)
    start = run_episode(instance, MyopicPolicy())
    plan = plan_from_result(instance, start)
    plan, cost = local_search(instance, plan, start.f_cost, budget)
    best_plan, best_cost = plan, cost
    if history is not None:
        history.append(best_cost)
    it = 0
    while best_cost > 0 and not budget.out() and (max_iters is None or it < max_iters):
        it += 1
        cand = perturb(best_plan, rng)
        cand, c = local_search(instance, cand, simulate_plan(instance, cand).f_cost, budget)
        if c < best_cost:
            best_plan, best_cost = cand, c
        if history is not None:
            history.append(best_cost)
    return simulate_plan(instance, best_plan)
