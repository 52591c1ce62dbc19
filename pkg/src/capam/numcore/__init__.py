"""Small dense autodiff core: tensors, a reverse-mode tape, layers and Adam."""
from .gradcheck import grad_check
from .nn import RunningStats, batch_norm, linear, uniform_init
from .ops import (NoFeasibleActionError, add, concat, einsum, elementwise_power, exp, log,
                  log_softmax, matmul, mean, mul, relu, reshape, scale, softmax, sub, take, tanh,
                  transpose)
from .ops import sum as tsum
from .optim import AdamState, NonFiniteGradientError, adam_step, clip_grad_norm, global_grad_norm
from .tensor import DimensionError, Tape, Tensor, as_tensor, grad_enabled

__all__ = [
    "AdamState", "DimensionError", "NoFeasibleActionError", "NonFiniteGradientError",
    "RunningStats", "Tape", "Tensor", "adam_step", "add", "as_tensor", "batch_norm",
    "clip_grad_norm", "concat", "einsum", "elementwise_power", "exp", "global_grad_norm",
    "grad_check", "grad_enabled", "linear", "log", "log_softmax", "matmul", "mean", "mul",
    "relu", "reshape", "scale", "softmax", "sub", "take", "tanh", "transpose", "tsum",
    "uniform_init",
]
