"""Multi-robot task allocation with a graph-capsule encoder / attention decoder policy."""
from .instances import SuiteSpec, generate_instance, generate_suite, load_instance, save_instance
from .model import CapAM, ModelConfig
from .problem import ProblemInstance, Robot, TaskNode
from .simulator import EpisodeResult, SimState, Simulator, run_episode, task_completion_percent
from .taskgraph import TaskGraph
from .trainer import TrainConfig, Trainer, evaluate, train

__all__ = [
    "CapAM", "EpisodeResult", "ModelConfig", "ProblemInstance", "Robot", "SimState", "Simulator",
    "SuiteSpec", "TaskGraph", "TaskNode", "TrainConfig", "Trainer", "evaluate", "generate_instance",
    "generate_suite", "load_instance", "run_episode", "save_instance", "task_completion_percent", "train",
]
