"""Event-driven TAPTC environment.

Robots decide one at a time, whenever they become free. A decision sends
the deciding robot to a task; it arrives after travelling at the instance
speed and then works for ``workload / capacity`` time units. Tasks that
nobody is heading to expire once their deadline has passed.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .problem import ProblemInstance
from .selection import select

ACTIVE, COMPLETED, MISSED = 0, 1, 2


class ContractViolation(RuntimeError):
    pass


class PolicyError(RuntimeError):
    pass


@dataclass
class SimState:
    t: float
    status: np.ndarray        # per task: ACTIVE / COMPLETED / MISSED
    t_f: np.ndarray           # completion time, nan until completed
    claimed_by: np.ndarray    # robot heading to / serving the task, -1 if none
    robot_xy: np.ndarray      # location of the last visited task (or start)
    robot_dest: np.ndarray    # task the robot is heading to, -1 when idle
    busy_until: np.ndarray
    queue: list = field(default_factory=list)   # heap of (time, robot)
    done: bool = False

    @property
    def decider(self) -> int | None:
        return None if self.done or not self.queue else self.queue[0][1]

    def copy(self) -> "SimState":
        return SimState(self.t, self.status.copy(), self.t_f.copy(), self.claimed_by.copy(),
                        self.robot_xy.copy(), self.robot_dest.copy(), self.busy_until.copy(),
                        list(self.queue), self.done)

    def counts(self) -> dict[str, int]:
        return {"active": int((self.status == ACTIVE).sum()),
                "completed": int((self.status == COMPLETED).sum()),
                "missed": int((self.status == MISSED).sum())}


@dataclass(frozen=True)
class Decision:
    time: float
    robot: int
    task: int
    log_prob: float
    counts: dict


@dataclass
class EpisodeResult:
    sequence: list[int]
    t_f: np.ndarray
    status: np.ndarray
    penalties: np.ndarray
    f_cost: float
    decisions: list[Decision]

    @property
    def log_probs(self) -> list[float]:
        return [d.log_prob for d in self.decisions]

    @property
    def actions(self) -> list[int]:
        return [d.task for d in self.decisions]


class Simulator:
    """Transition function for one instance; states are separate values."""

    def __init__(self, instance: ProblemInstance):
        instance.validate()
        self.instance = instance
        self.task_xy = instance.task_xy
        self.deadlines = instance.deadlines
        self.workloads = instance.workloads
        self.capacities = instance.capacities
        self.speed = float(instance.speed)

    def reset(self) -> SimState:
        n, m = self.instance.n_tasks, self.instance.n_robots
        state = SimState(
            t=0.0,
            status=np.zeros(n, dtype=np.int8),
            t_f=np.full(n, np.nan),
            claimed_by=np.full(n, -1, dtype=np.int64),
            robot_xy=self.instance.robot_xy.copy(),
            robot_dest=np.full(m, -1, dtype=np.int64),
            busy_until=np.zeros(m),
            queue=[(0.0, j) for j in range(m)],
        )
        self._advance(state)
        return state

    def feasible_mask(self, state: SimState) -> np.ndarray:
        return (state.status == ACTIVE) & (state.claimed_by < 0)

    def step(self, state: SimState, robot: int, task: int) -> SimState:
        new = state.copy()
        self.step_inplace(new, robot, task)
        return new

    def step_inplace(self, state: SimState, robot: int, task: int) -> None:
        if state.done:
            raise ContractViolation("episode already terminated")
        if robot != state.decider:
            raise ContractViolation(f"robot {robot} is not the current decider ({state.decider})")
        if not (0 <= task < state.status.size) or not self.feasible_mask(state)[task]:
            raise ContractViolation(f"task {task} is not feasible for robot {robot}")
        heapq.heappop(state.queue)
        dx, dy = self.task_xy[task] - state.robot_xy[robot]
        arrival = state.t + math.hypot(dx, dy) / self.speed
        finish = arrival + self.workloads[task] / self.capacities[robot]
        state.robot_dest[robot] = task
        state.claimed_by[task] = robot
        state.busy_until[robot] = finish
        heapq.heappush(state.queue, (finish, robot))
        self._advance(state)

    def _advance(self, state: SimState) -> None:
        """Move the clock to the next robot that has something to decide."""
        while state.queue:
            time, r = state.queue[0]
            state.t = max(state.t, time)
            task = state.robot_dest[r]
            if task >= 0:
                state.status[task] = COMPLETED
                state.t_f[task] = state.busy_until[r]
                state.claimed_by[task] = -1
                state.robot_xy[r] = self.task_xy[task]
                state.robot_dest[r] = -1
            expired = (state.status == ACTIVE) & (state.claimed_by < 0) & (self.deadlines < state.t)
            state.status[expired] = MISSED
            if not (state.status == ACTIVE).any():
                break
            if self.feasible_mask(state).any():
                return
            # nothing left that this robot could take: it stops where it is
            heapq.heappop(state.queue)
        state.done = True

    def penalties(self, state: SimState) -> np.ndarray:
        if not state.done:
            raise ContractViolation("episode cost requested before termination")
        late = (state.status == COMPLETED) & (state.t_f > self.deadlines)
        r = np.zeros(state.status.size)
        r[late] = state.t_f[late] / self.deadlines[late]
        r[state.status == MISSED] = 1.0
        return r

    def episode_cost(self, state: SimState) -> tuple[float, np.ndarray]:
        r = self.penalties(state)
        return float(r.sum()), r


def episode_cost(instance: ProblemInstance, state: SimState) -> tuple[float, np.ndarray]:
    return Simulator(instance).episode_cost(state)


def task_completion_percent(result: EpisodeResult) -> float:
    """Share of tasks completed no later than their deadline, in percent."""
    on_time = (result.status == COMPLETED) & (result.penalties == 0)
    return 100.0 * float(on_time.sum()) / result.status.size


def run_episode(instance: ProblemInstance, policy, mode: str = "greedy", seed=None,
                trace_path=None) -> EpisodeResult:
    """Roll out ``policy`` until no task is active.

    ``policy(state, robot)`` returns a probability vector over tasks; if it
    has a ``begin(instance)`` method that is called first and its return
    value (when not ``None``) is used as the per-episode callable.
    """
    sim = Simulator(instance)
    begin = getattr(policy, "begin", None)
    if begin is not None:
        bound = begin(instance)
        if bound is not None:
            policy = bound
    rng = np.random.default_rng(seed)
    state = sim.reset()
    decisions: list[Decision] = []
    while not state.done:
        robot = state.decider
        mask = sim.feasible_mask(state)
        assert mask.any()
        probs = np.asarray(policy(state, robot), dtype=float)
        if probs.shape != mask.shape or not np.all(np.isfinite(probs)) or (probs < 0).any():
            raise PolicyError(f"policy returned an invalid distribution for robot {robot} at t={state.t}")
        if probs[~mask].any() or probs.sum() <= 0:
            raise PolicyError(f"policy put mass on infeasible tasks at t={state.t}")
        task, logp = select(probs, mode, rng)
        decisions.append(Decision(state.t, robot, task, logp, state.counts()))
        sim.step_inplace(state, robot, task)
    cost, r = sim.episode_cost(state)
    result = EpisodeResult([d.task for d in decisions], state.t_f.copy(), state.status.copy(), r, cost,
                           decisions)
    if trace_path is not None:
        write_trace(result, trace_path)
    return result


def write_trace(result: EpisodeResult, path) -> None:
    with open(path, "w") as fh:
        for d in result.decisions:
            fh.write(json.dumps({"time": d.time, "robot": d.robot, "action": d.task, **d.counts}) + "\n")


class ScriptedPolicy:
    """Plays back a fixed list of task choices, one per decision."""

    def __init__(self, actions: Sequence[int]):
        self.actions = list(actions)

    def begin(self, instance):
        it = iter(self.actions)

        def play(state, robot):
            probs = np.zeros(state.status.size)
            try:
                probs[next(it)] = 1.0
            except StopIteration:
                raise PolicyError("scripted actions exhausted before the episode ended") from None
            return probs

        return play


def replay(instance: ProblemInstance, actions: Sequence[int]) -> EpisodeResult:
    return run_episode(instance, ScriptedPolicy(actions), mode="greedy")


def replay_states(instance: ProblemInstance, actions: Sequence[int]):
    """Yield ``(state, robot, mask)`` at every decision of a recorded episode."""
    sim = Simulator(instance)
    state = sim.reset()
    for task in actions:
        robot = state.decider
        yield state, robot, sim.feasible_mask(state)
        state = sim.step(state, robot, task)
