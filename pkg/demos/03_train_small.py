"""Train a small policy with REINFORCE and compare it against its untrained self and random choice.

About a minute on one CPU core.  Run:  python demos/03_train_small.py
"""
import logging

import numpy as np

from capam.baselines import MyopicPolicy, RandomPolicy
from capam.instances import generate_batch
from capam.model import ModelConfig
from capam.simulator import run_episode, task_completion_percent
from capam.trainer import TrainConfig, Trainer

logging.basicConfig(level=logging.INFO, format="%(message)s")

config = TrainConfig(epochs=8, samples_per_epoch=640, val_size=200, batch_size=64, lr=1e-3, n_tasks=10,
                     n_robots=(2, 2), seed=0, model=ModelConfig(h0=32, h_l=32, K=2, P=2, L_e=1, h_e=8))
trainer = Trainer(config)
untrained = trainer.policy.copy()
history = trainer.fit("runs/demo")
print(f"{len(history)} batches; first mean cost {history[0].mean_cost:.3f}, last {history[-1].mean_cost:.3f}")

held_out = generate_batch(200, 10, 2, 777)


def pct(policy, mode="greedy"):
    return np.mean([task_completion_percent(run_episode(inst, policy, mode, seed=i))
                    for i, inst in enumerate(held_out)])


print(f"trained   {pct(trainer.policy):6.2f}% tasks on time")
print(f"untrained {pct(untrained):6.2f}%")
print(f"myopic    {pct(MyopicPolicy()):6.2f}%")
print(f"random    {pct(RandomPolicy(), 'sample'):6.2f}%")
print("checkpoints and train_log.csv are in runs/demo/")
