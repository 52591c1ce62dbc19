"""Heuristics, matching and local search measured against the exact optimum on tiny missions.

Run:  python demos/04_baselines_vs_oracle.py
"""
import numpy as np

from capam.baselines import (BigMRTAPolicy, MyopicPolicy, RandomPolicy, exhaustive_oracle, iterated_local_search,
                             max_weight_matching)
from capam.instances import generate_instance
from capam.simulator import run_episode

# The matching step on its own: robot 0 values task 1 most, robot 1 task 0.
print("matching of [[1, 2], [3, 1]]:", max_weight_matching([[1, 2], [3, 1]]))

rng = np.random.default_rng(4)
rows = []
for k in range(20):
    inst = generate_instance(int(rng.integers(3, 7)), int(rng.integers(1, 3)), rng)
    opt = exhaustive_oracle(inst)
    rows.append([opt.f_cost,
                 run_episode(inst, MyopicPolicy()).f_cost,
                 run_episode(inst, BigMRTAPolicy()).f_cost,
                 iterated_local_search(inst, 0.3, seed=k).f_cost,
                 run_episode(inst, RandomPolicy(), "sample", seed=k).f_cost])
costs = np.array(rows)
names = ["oracle", "myopic", "bigmrta", "ils", "random"]
print("\nmean cost over 20 tiny instances:")
for name, col in zip(names, costs.T):
    hits = np.isclose(col, costs[:, 0]).sum()
    print(f"  {name:8s} {col.mean():6.3f}   optimal on {hits}/20")

# Local search history: the incumbent never gets worse.
inst = generate_instance(30, 3, np.random.default_rng(9))
history = []
iterated_local_search(inst, None, seed=0, max_iters=10, history=history)
print("\nILS incumbent cost per iteration on a 30-task instance:", np.round(history, 3))
