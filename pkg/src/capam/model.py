"""The encoder-decoder policy: parameters, rollout hook, scoring and checkpoints."""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass

import numpy as np

from . import numcore as nc
from .decoder import CONTEXT_WIDTH, LOGIT_CLIP, build_context, decode_logits, init_decoder_params, project_nodes
from .encoder import encode, init_encoder_params
from .numcore import RunningStats, Tensor
from .numcore.checkpoint import load_checkpoint, save_checkpoint
from .problem import ProblemInstance
from .simulator import Decision, Simulator, replay_states
from .taskgraph import TaskGraph


@dataclass(frozen=True)
class ModelConfig:
    h0: int = 128
    h_l: int = 128
    K: int = 2
    P: int = 3
    L_e: int = 1
    h_e: int = 8
    sigma: str = "relu"
    clip: float = LOGIT_CLIP
    with_workload: bool = False

    @property
    def n_features(self) -> int:
        return 4 if self.with_workload else 3

    def validate(self) -> None:
        if min(self.h0, self.h_l, self.P, self.L_e, self.h_e) < 1 or self.K < 0:
            raise ValueError(f"invalid model config {self}")
        if self.h_l % self.h_e:
            raise ValueError(f"h_l={self.h_l} is not divisible by h_e={self.h_e}")


class CapAM:
    """Graph-capsule encoder + attention decoder policy.

    Usable directly as a simulator policy: ``begin(instance)`` encodes the
    task graph once and returns a per-decision callable.
    """

    def __init__(self, config: ModelConfig = ModelConfig(), seed: int = 0):
        config.validate()
        self.config = config
        self.seed = seed
        rng = np.random.default_rng(seed)
        raw = init_encoder_params(rng, config.n_features, config.h0, config.h_l, config.K, config.P, config.L_e)
        raw.update(init_decoder_params(rng, config.h_l, CONTEXT_WIDTH))
        self.params = {name: Tensor(a, requires_grad=True, name=name) for name, a in raw.items()}
        self.bn_stats = RunningStats(config.h_l)

    # --- forward pieces -------------------------------------------------
    def graph(self, instance: ProblemInstance) -> TaskGraph:
        return TaskGraph.from_instance(instance, self.config.K, self.config.with_workload)

    def embed(self, graph: TaskGraph) -> Tensor:
        c = self.config
        return encode(graph, self.params, c.K, c.P, c.L_e, c.sigma)

    def begin(self, instance: ProblemInstance):
        keys, values = project_nodes(self.embed(self.graph(instance)), self.params)
        keys, values = Tensor(keys.data), Tensor(values.data)
        params, stats, c = self.params, self.bn_stats, self.config
        sim = Simulator(instance)

        def decide(state, robot):
            ctx = build_context(instance, state, robot)
            mask = sim.feasible_mask(state)
            logp = decode_logits(keys, values, ctx, mask[None, :], params, stats, c.h_e, "eval", c.clip)
            probs = np.exp(logp.data[0])
            probs[~mask] = 0.0
            return probs

        return decide

    def decision_inputs(self, instance: ProblemInstance, actions) -> tuple[np.ndarray, np.ndarray]:
        """Contexts and masks at every decision of a recorded episode."""
        ctx, masks = [], []
        for state, robot, mask in replay_states(instance, actions):
            ctx.append(build_context(instance, state, robot))
            masks.append(mask)
        return np.array(ctx), np.array(masks)

    def episode_log_prob(self, instance: ProblemInstance, actions, collect: list | None = None,
                         inputs=None) -> Tensor:
        """Differentiable sum of log-probabilities of ``actions`` under this policy."""
        actions = [d.task if isinstance(d, Decision) else int(d) for d in actions]
        contexts, masks = inputs if inputs is not None else self.decision_inputs(instance, actions)
        keys, values = project_nodes(self.embed(self.graph(instance)), self.params)
        c = self.config
        logp = decode_logits(keys, values, contexts, masks, self.params, self.bn_stats, c.h_e, "eval",
                             c.clip, collect)
        chosen = nc.take(logp, (np.arange(len(actions)), np.array(actions)))
        return nc.tsum(chosen)

    # --- bookkeeping ----------------------------------------------------
    def copy(self) -> "CapAM":
        other = copy.copy(self)
        other.params = {n: Tensor(p.data.copy(), requires_grad=True, name=n) for n, p in self.params.items()}
        other.bn_stats = self.bn_stats.copy()
        return other

    def load_from(self, other: "CapAM") -> None:
        for name, p in other.params.items():
            self.params[name].data = p.data.copy()
        self.bn_stats = other.bn_stats.copy()

    def arrays(self) -> dict[str, np.ndarray]:
        out = {n: p.data for n, p in self.params.items()}
        out["buffer.bn_mean"] = self.bn_stats.mean
        out["buffer.bn_var"] = self.bn_stats.var
        return out

    def n_parameters(self) -> int:
        return int(sum(p.data.size for p in self.params.values()))

    def save(self, path, **extra) -> None:
        header = {**asdict(self.config), "rng_seed": self.seed, **extra}
        save_checkpoint(path, header, self.arrays())

    @classmethod
    def load(cls, path) -> "CapAM":
        header, arrays = load_checkpoint(path)
        fields = {k: header[k] for k in ModelConfig.__dataclass_fields__ if k in header}
        model = cls(ModelConfig(**fields), seed=int(header.get("rng_seed", 0)))
        expected = {n: a.shape for n, a in model.arrays().items()}
        _, arrays = load_checkpoint(path, expected)
        for name, p in model.params.items():
            p.data = arrays[name].copy()
        model.bn_stats.mean = arrays["buffer.bn_mean"].copy()
        model.bn_stats.var = arrays["buffer.bn_var"].copy()
        return model
