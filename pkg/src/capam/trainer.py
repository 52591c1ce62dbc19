"""REINFORCE with a greedy-rollout baseline."""
from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import numcore as nc
from .instances import generate_batch
from .model import CapAM, ModelConfig
from .simulator import EpisodeResult, run_episode, task_completion_percent

log = logging.getLogger(__name__)

TRAIN_LOG_COLUMNS = ("epoch", "batch", "mean_cost", "mean_advantage", "grad_norm", "baseline_updated")

# stream tags keep training, validation and sampling seeds apart
_TRAIN, _VALID, _SAMPLE = 1, 2, 3


@dataclass
class TrainConfig:
    epochs: int = 100
    samples_per_epoch: int = 500_000
    val_size: int = 10_000
    batch_size: int = 500
    lr: float = 1e-4
    n_tasks: int = 100
    n_robots: tuple[int, int] = (2, 7)
    seed: int = 0
    significance: float = 0.05
    grad_clip: float = 1.0
    model: ModelConfig = field(default_factory=ModelConfig)

    def validate(self) -> None:
        if self.samples_per_epoch % self.batch_size:
            raise ValueError("batch size must divide samples per epoch")
        if min(self.epochs, self.batch_size, self.val_size, self.n_tasks) < 1:
            raise ValueError("epochs, batch size, validation size and task count must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        model = ModelConfig(**d.pop("model", {}))
        if "n_robots" in d:
            nr = d["n_robots"]
            d["n_robots"] = (nr, nr) if isinstance(nr, int) else tuple(nr)
        return cls(model=model, **d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_robots"] = list(self.n_robots)
        return d


def rollout_batch(policy, instances, mode: str, seed=None, key=()) -> list[EpisodeResult]:
    """One episode per instance; sample mode draws with an independent stream per instance."""
    out = []
    for i, inst in enumerate(instances):
        s = None if mode == "greedy" else [*_words(seed), _SAMPLE, *key, i]
        out.append(run_episode(inst, policy, mode, seed=s))
    return out


def _words(seed):
    return list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]


def reinforce_loss(log_prob_sums: list[nc.Tensor], costs, baseline_costs) -> nc.Tensor:
    """Mean of ``(cost - baseline cost) * sum log p`` over the batch.

    The baseline enters as a constant. Minimizing this loss lowers the
    expected episode cost.
    """
    adv = np.asarray(costs, dtype=float) - np.asarray(baseline_costs, dtype=float)
    for lp in log_prob_sums:
        if not np.isfinite(lp.data):
            raise FloatingPointError(f"non-finite episode log-probability {float(lp.data)}")
    total = None
    for a, lp in zip(adv, log_prob_sums):
        term = nc.scale(lp, float(a) / len(log_prob_sums))
        total = term if total is None else nc.add(total, term)
    return total


def paired_improvement_pvalue(candidate_costs, reference_costs) -> float:
    """One-sided paired t-test p-value for ``candidate < reference`` (1.0 when undefined)."""
    cand = np.asarray(candidate_costs, dtype=float)
    ref = np.asarray(reference_costs, dtype=float)
    if cand.size < 2 or np.all(cand == ref):
        return 1.0
    p = sps.ttest_rel(cand, ref, alternative="less").pvalue
    return 1.0 if not np.isfinite(p) else float(p)


def greedy_costs(policy, instances) -> np.ndarray:
    return np.array([r.f_cost for r in rollout_batch(policy, instances, "greedy")])


def maybe_update_baseline(policy: CapAM, baseline: CapAM, val_instances, significance: float = 0.05,
                          baseline_costs=None) -> tuple[bool, float]:
    """Copy the learner into the baseline when it is significantly better on validation.

    Returns ``(updated, p_value)``.
    """
    learner = greedy_costs(policy, val_instances)
    reference = greedy_costs(baseline, val_instances) if baseline_costs is None else baseline_costs
    p = paired_improvement_pvalue(learner, reference)
    if learner.mean() < reference.mean() and p < significance:
        baseline.load_from(policy)
        return True, p
    return False, p


@dataclass
class BatchMetrics:
    epoch: int
    batch: int
    mean_cost: float
    mean_advantage: float
    grad_norm: float
    baseline_updated: int = 0

    def row(self) -> list:
        return [self.epoch, self.batch, repr(self.mean_cost), repr(self.mean_advantage), repr(self.grad_norm),
                self.baseline_updated]


class Trainer:
    def __init__(self, config: TrainConfig, policy: CapAM | None = None):
        config.validate()
        self.config = config
        self.policy = policy if policy is not None else CapAM(config.model, seed=config.seed)
        self.baseline = self.policy.copy()
        self.adam = nc.AdamState(lr=config.lr)
        self.val_instances = generate_batch(config.val_size, config.n_tasks, tuple(config.n_robots),
                                            config.seed, _VALID)
        self._baseline_val_costs = None

    def train_step(self, instances, key) -> BatchMetrics:
        cfg, policy = self.config, self.policy
        sampled = rollout_batch(policy, instances, "sample", cfg.seed, key)
        base = rollout_batch(self.baseline, instances, "greedy")
        costs = np.array([r.f_cost for r in sampled])
        base_costs = np.array([r.f_cost for r in base])

        for p in policy.params.values():
            p.grad = None
        collected: list[np.ndarray] = []
        with nc.Tape() as tape:
            lps = [policy.episode_log_prob(inst, r.actions, collected) for inst, r in zip(instances, sampled)]
            loss = reinforce_loss(lps, costs, base_costs)
        tape.backward(loss)
        grads = {n: (p.grad if p.grad is not None else np.zeros_like(p.data)) for n, p in policy.params.items()}
        norm = nc.clip_grad_norm(grads, cfg.grad_clip)
        if norm > 0:
            nc.adam_step(policy.params, grads, self.adam)
        glimpses = np.concatenate(collected, axis=0)
        if glimpses.shape[0] > 1:
            policy.bn_stats.update(glimpses.mean(axis=0), glimpses.var(axis=0, ddof=1))
        return BatchMetrics(key[0], key[1], float(costs.mean()), float((costs - base_costs).mean()), norm)

    def train_epoch(self, epoch: int) -> list[BatchMetrics]:
        cfg = self.config
        metrics = []
        for b in range(cfg.samples_per_epoch // cfg.batch_size):
            instances = generate_batch(cfg.batch_size, cfg.n_tasks, tuple(cfg.n_robots), cfg.seed, _TRAIN, epoch, b)
            metrics.append(self.train_step(instances, (epoch, b)))
        updated, p = maybe_update_baseline(self.policy, self.baseline, self.val_instances, cfg.significance,
                                           self._baseline_val_costs)
        if updated or self._baseline_val_costs is None:
            self._baseline_val_costs = greedy_costs(self.baseline, self.val_instances)
        metrics[-1].baseline_updated = int(updated)
        log.info("epoch %d: mean cost %.4f, baseline %s (p=%.3g)", epoch, np.mean([m.mean_cost for m in metrics]),
                 "updated" if updated else "kept", p)
        return metrics

    def fit(self, out_dir=None) -> list[BatchMetrics]:
        history = []
        writer = None
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / "config.json").write_text(json.dumps(self.config.to_dict(), indent=1) + "\n")
            fh = open(out / "train_log.csv", "w", newline="")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRAIN_LOG_COLUMNS)
        try:
            for epoch in range(self.config.epochs):
                metrics = self.train_epoch(epoch)
                history.extend(metrics)
                if writer is not None:
                    writer.writerows(m.row() for m in metrics)
                    fh.flush()
                    self.policy.save(out / f"epoch_{epoch:03d}.json", epoch=epoch)
        finally:
            if writer is not None:
                fh.close()
        if out_dir is not None:
            self.policy.save(out / "final.json", epoch=self.config.epochs - 1)
        return history


def train(config: TrainConfig, out_dir=None) -> tuple[CapAM, list[BatchMetrics]]:
    trainer = Trainer(config)
    history = trainer.fit(out_dir)
    return trainer.policy, history


@dataclass
class EvalRecord:
    f_cost: float
    completion_pct: float
    latency_ms: float
    result: EpisodeResult


def evaluate_instance(policy, instance, mode: str = "greedy", seed=None) -> EvalRecord:
    t0 = time.perf_counter()
    result = run_episode(instance, policy, mode, seed=seed)
    latency = (time.perf_counter() - t0) * 1000.0
    return EvalRecord(result.f_cost, task_completion_percent(result), latency, result)


def evaluate(policy, instances, mode: str = "greedy", seed=None) -> dict:
    """Mean cost, completion % and wall-clock latency per full assignment sequence."""
    records = [evaluate_instance(policy, inst, mode, None if seed is None else [*_words(seed), _SAMPLE, i])
               for i, inst in enumerate(instances)]
    return {
        "mean_cost": float(np.mean([r.f_cost for r in records])),
        "mean_completion_pct": float(np.mean([r.completion_pct for r in records])),
        "mean_latency_ms": float(np.mean([r.latency_ms for r in records])),
        "records": records,
    }
