"""Walk one small mission through the simulator by hand, then let a policy drive it.

Run:  python demos/01_one_episode.py
"""
import numpy as np

from capam.baselines import MyopicPolicy
from capam.instances import generate_instance
from capam.problem import ProblemInstance, Robot, TaskNode
from capam.simulator import Simulator, run_episode, task_completion_percent

# A robot at the origin with capacity 2 and a task 5 units away carrying
# 10 units of work: it arrives at t=5 and finishes at t=5+10/2=10.
inst = ProblemInstance((TaskNode(3, 4, deadline=600, workload=10), TaskNode(0, 0, deadline=600, workload=900)),
                       (Robot(0, 0, capacity=2),))
sim = Simulator(inst)
state = sim.reset()
print("decider at t=0:", state.decider, "feasible:", sim.feasible_mask(state))
state = sim.step(state, robot=0, task=0)
print(f"task 0 completed at t_f={state.t_f[0]}")

# The second task needs 900/2 = 450 time units of work. The robot leaves
# (3, 4) at t=10, is back at the origin at 15 and ends at 465, on time. A late finish would cost t_f/d instead of 0.
state = sim.step(state, robot=0, task=1)
cost, per_task = sim.episode_cost(state)
print(f"finished={state.done} cost={cost} per-task={per_task}")

# Now a random 20-task, 3-robot scenario driven by the urgency heuristic.
inst = generate_instance(20, 3, np.random.default_rng(0))
result = run_episode(inst, MyopicPolicy(), trace_path="episode_trace.jsonl")
print(f"\n20 tasks / 3 robots: {len(result.sequence)} decisions, cost {result.f_cost:.3f}, "
      f"{task_completion_percent(result):.0f}% completed on time")
for d in result.decisions[:5]:
    print(f"  t={d.time:7.2f}  robot {d.robot} -> task {d.task:2d}   {d.counts}")
print("full trace written to episode_trace.jsonl")
