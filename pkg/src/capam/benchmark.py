"""Benchmark harness: run solvers over instance sets and write plot-ready CSV."""
from __future__ import annotations

import csv
import time
from collections import defaultdict

import numpy as np

from .baselines import (BigMRTAPolicy, MyopicPolicy, OracleSizeError, RandomPolicy, exhaustive_oracle,
                        iterated_local_search)
from .simulator import EpisodeResult, run_episode, task_completion_percent

BENCH_COLUMNS = ("instance", "suite", "group", "fraction", "robots", "tasks", "solver", "seed", "f_cost",
                 "completion_pct", "latency_ms")
EVAL_COLUMNS = ("instance", "f_cost", "completion_pct", "latency_ms")
SOLVERS = ("myopic", "bigmrta", "ils", "oracle", "random")


def solve(solver: str, instance, seed: int = 0, model=None, ils_budget: float = 1.0,
          mode: str = "greedy") -> EpisodeResult:
    if solver == "capam":
        if model is None:
            raise ValueError("the capam solver needs a checkpoint")
        return run_episode(instance, model, mode, seed=seed)
    if solver == "myopic":
        return run_episode(instance, MyopicPolicy())
    if solver == "bigmrta":
        return run_episode(instance, BigMRTAPolicy())
    if solver == "random":
        return run_episode(instance, RandomPolicy(), "sample", seed=seed)
    if solver == "ils":
        return iterated_local_search(instance, ils_budget, seed=seed)
    if solver == "oracle":
        return exhaustive_oracle(instance).result
    raise ValueError(f"unknown solver {solver!r}; choose from {('capam',) + SOLVERS}")


def timed_solve(*args, **kwargs) -> tuple[EpisodeResult, float]:
    t0 = time.perf_counter()
    result = solve(*args, **kwargs)
    return result, (time.perf_counter() - t0) * 1000.0


def _fmt(x: float) -> str:
    return repr(float(x))


def bench_rows(named_instances, solvers, seed: int = 0, model=None, ils_budget: float = 1.0,
               timing: bool = True) -> list[dict]:
    """One row per (solver, instance); the oracle is skipped on instances it refuses."""
    rows = []
    for solver in solvers:
        for name, inst in named_instances:
            try:
                result, ms = timed_solve(solver, inst, seed=seed, model=model, ils_budget=ils_budget)
            except OracleSizeError:
                continue
            m = inst.metadata
            rows.append({
                "instance": name, "suite": m.get("suite", ""), "group": m.get("group", ""),
                "fraction": m.get("fraction", ""), "robots": inst.n_robots, "tasks": inst.n_tasks,
                "solver": solver, "seed": seed, "f_cost": _fmt(result.f_cost),
                "completion_pct": _fmt(task_completion_percent(result)),
                "latency_ms": _fmt(ms) if timing else "",
            })
    return rows


def completion_matrix(rows) -> tuple[list[str], list[list]]:
    """Mean completion % per (tasks, robots) row and solver column."""
    cells = defaultdict(list)
    solvers = []
    for r in rows:
        if r["solver"] not in solvers:
            solvers.append(r["solver"])
        cells[(int(r["tasks"]), int(r["robots"]), r["solver"])].append(float(r["completion_pct"]))
    keys = sorted({(t, m) for t, m, _ in cells})
    table = []
    for t, m in keys:
        vals = [cells.get((t, m, s)) for s in solvers]
        table.append([t, m] + [_fmt(np.mean(v)) if v else "" for v in vals])
    return ["tasks", "robots"] + solvers, table


def write_rows(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def write_table(path, header, table) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(table)
