"""Minimal reverse-mode automatic differentiation for GRU and MLP training."""

from cqdd.autodiff.optim import (
    AdamState,
    OneCycleSchedule,
    Optimizer,
    adam_step,
    clip_grad_norm,
    one_cycle_lr,
)
from cqdd.autodiff.tensor import (
    Tape,
    Tensor2D,
    add,
    add_bias,
    backward,
    concat_rows,
    matmul,
    mse_loss,
    mul,
    sigmoid,
    slice_rows,
    sub,
    tanh,
)

__all__ = [
    "AdamState",
    "OneCycleSchedule",
    "Optimizer",
    "Tape",
    "Tensor2D",
    "adam_step",
    "add",
    "add_bias",
    "backward",
    "clip_grad_norm",
    "concat_rows",
    "matmul",
    "mse_loss",
    "mul",
    "one_cycle_lr",
    "sigmoid",
    "slice_rows",
    "sub",
    "tanh",
]
