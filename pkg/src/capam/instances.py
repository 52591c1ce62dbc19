"""Instance sampling, benchmark suites and the instance file format."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import truncnorm

from .problem import GRID, SPEED, InstanceValidationError, ProblemInstance, Robot, TaskNode

FORMAT_VERSION = 1

DEADLINE_RANGE = (50.0, 600.0)
WORKLOAD_RANGE = (10.0, 30.0)
CAPACITY_RANGE = (1.0, 3.0)


class InstanceFormatError(ValueError):
    pass


def generate_instance(n_tasks: int, n_robots: int, rng: np.random.Generator,
                      integer_capacity: bool = False, deadline_range=DEADLINE_RANGE) -> ProblemInstance:
    """Sample a scenario with every quantity uniform within its bounds."""
    if n_tasks < 1:
        raise ValueError("need at least one task")
    if n_robots < 1:
        raise ValueError("need at least one robot")
    txy = rng.uniform(0.0, GRID, size=(n_tasks, 2))
    deadlines = rng.uniform(*deadline_range, size=n_tasks)
    workloads = rng.uniform(*WORKLOAD_RANGE, size=n_tasks)
    rxy = rng.uniform(0.0, GRID, size=(n_robots, 2))
    if integer_capacity:
        caps = rng.integers(1, 4, size=n_robots).astype(float)
    else:
        caps = rng.uniform(*CAPACITY_RANGE, size=n_robots)
    tasks = tuple(TaskNode(float(x), float(y), float(d), float(w))
                  for (x, y), d, w in zip(txy, deadlines, workloads))
    robots = tuple(Robot(float(x), float(y), float(c)) for (x, y), c in zip(rxy, caps))
    return ProblemInstance(tasks, robots, SPEED, GRID)


def generate_batch(n: int, n_tasks: int, n_robots, seed, *key) -> list[ProblemInstance]:
    """``n`` independent instances; ``n_robots`` may be an int or an inclusive ``(lo, hi)`` range."""
    out = []
    for i in range(n):
        rng = np.random.default_rng([*_seed_words(seed), *key, i])
        m = n_robots if isinstance(n_robots, int) else int(rng.integers(n_robots[0], n_robots[1] + 1))
        out.append(generate_instance(n_tasks, m, rng))
    return out


def _seed_words(seed) -> list[int]:
    return [int(s) for s in seed] if isinstance(seed, (list, tuple)) else [int(seed)]


@dataclass(frozen=True)
class SuiteSpec:
    name: str = "default"
    groups: dict = field(default_factory=lambda: {"tight": (50.0, 300.0), "slack": (50.0, 600.0)})
    fractions: tuple[int, ...] = (25, 50, 75, 100)
    robot_counts: tuple[int, ...] = (2, 3, 5, 7)
    n_tasks: int = 100
    cases_per_cell: int = 3
    integer_capacity: bool = False

    def validate(self) -> None:
        if {"tight", "slack"} <= set(self.groups):
            if not np.isclose(self.groups["tight"][1], self.groups["slack"][1] / 2):
                raise ValueError("tight-group d_high must be half of the slack group's")
        for lo, hi in self.groups.values():
            if not 0 < lo < hi:
                raise ValueError(f"bad deadline limits ({lo}, {hi})")
        if any(not 0 < f <= 100 for f in self.fractions):
            raise ValueError("fractions are percentages in (0, 100]")

    @property
    def size(self) -> int:
        return len(self.groups) * len(self.fractions) * len(self.robot_counts) * self.cases_per_cell


def _suite_deadlines(n: int, fraction: int, d_low: float, d_high: float, rng) -> np.ndarray:
    k = int(round(n * fraction / 100.0))
    deadlines = np.full(n, d_high)
    mid, sd = (d_low + d_high) / 2.0, (d_high - d_low) / 6.0
    idx = rng.permutation(n)[:k]
    deadlines[idx] = truncnorm.rvs((d_low - mid) / sd, (d_high - mid) / sd, loc=mid, scale=sd,
                                   size=k, random_state=rng)
    return deadlines


def generate_suite(spec: SuiteSpec, seed: int) -> list[ProblemInstance]:
    """One instance per (group, fraction, robot count, case), in that nesting order."""
    spec.validate()
    suite = []
    for gi, (group, (d_low, d_high)) in enumerate(spec.groups.items()):
        for fi, fraction in enumerate(spec.fractions):
            for ri, n_robots in enumerate(spec.robot_counts):
                for case in range(spec.cases_per_cell):
                    rng = np.random.default_rng([seed, gi, fi, ri, case])
                    base = generate_instance(spec.n_tasks, n_robots, rng, spec.integer_capacity)
                    deadlines = _suite_deadlines(spec.n_tasks, fraction, d_low, d_high, rng)
                    tasks = tuple(TaskNode(t.x, t.y, float(d), t.workload) for t, d in zip(base.tasks, deadlines))
                    meta = {"suite": spec.name, "group": group, "fraction": fraction, "robots": n_robots,
                            "case": case, "seed": seed}
                    suite.append(ProblemInstance(tasks, base.robots, base.speed, base.grid, meta))
    return suite


def to_document(instance: ProblemInstance) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "grid": instance.grid,
        "speed": instance.speed,
        "tasks": [{"x": t.x, "y": t.y, "deadline": t.deadline, "workload": t.workload} for t in instance.tasks],
        "robots": [{"x": r.x, "y": r.y, "capacity": r.capacity} for r in instance.robots],
        "metadata": instance.metadata,
    }


def from_document(doc: dict) -> ProblemInstance:
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise InstanceFormatError("missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise InstanceFormatError(f"unsupported format_version {doc['format_version']!r}")
    try:
        tasks = tuple(TaskNode(float(t["x"]), float(t["y"]), float(t["deadline"]), float(t["workload"]))
                      for t in doc["tasks"])
        robots = tuple(Robot(float(r["x"]), float(r["y"]), float(r["capacity"])) for r in doc["robots"])
        inst = ProblemInstance(tasks, robots, float(doc["speed"]), float(doc["grid"]), dict(doc.get("metadata", {})))
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"malformed instance: {exc!r}") from None
    try:
        inst.validate()
    except InstanceValidationError as exc:
        raise InstanceFormatError(str(exc)) from None
    return inst


def save_instance(instance: ProblemInstance, path) -> None:
    Path(path).write_text(json.dumps(to_document(instance), indent=1) + "\n")


def load_instance(path) -> ProblemInstance:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise InstanceFormatError(f"{path}: line {exc.lineno}: {exc.msg}: {context!r}") from None
    return from_document(doc)


def instance_filename(instance: ProblemInstance, index: int) -> str:
    m = instance.metadata
    if {"group", "fraction", "robots", "case"} <= set(m):
        return f"{m['group']}_f{m['fraction']:03d}_r{m['robots']}_c{m['case']}.json"
    return f"instance_{index:04d}.json"


def load_instances(path) -> list[tuple[str, ProblemInstance]]:
    """A single instance file or every ``*.json`` in a directory, sorted by name."""
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.json"))
        if not files:
            raise InstanceFormatError(f"no instance files in {p}")
        return [(f.stem, load_instance(f)) for f in files]
    return [(p.stem, load_instance(p))]
