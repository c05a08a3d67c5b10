"""Adam, global-norm gradient clipping and the one-cycle learning-rate schedule."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from cqdd.autodiff.tensor import Tensor2D
from cqdd.errors import NonFiniteError, ShapeError


@dataclass
class AdamState:
    """Moment accumulators, one pair per parameter in parameter order."""

    first: list[np.ndarray]
    second: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: Sequence[Tensor2D]) -> AdamState:
        return cls(
            first=[np.zeros_like(p.data) for p in params],
            second=[np.zeros_like(p.data) for p in params],
        )


def adam_step(
    params: Sequence[Tensor2D],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
) -> AdamState:
    """Bias-corrected Adam update; each param gets a fresh data array."""
    if not len(params) == len(grads) == len(state.first):
        raise ShapeError(
            f"adam_step: {len(params)} params, {len(grads)} grads, {len(state.first)} moments"
        )
    for i, (p, g) in enumerate(zip(params, grads)):
        if g.shape != p.data.shape:
            raise ShapeError(f"adam_step: gradient {g.shape} for parameter {p.data.shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"adam_step: non-finite gradient for parameter {i} {p!r}")

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**state.step
    correction2 = 1.0 - b2**state.step
    for p, g, m, v in zip(params, grads, state.first, state.second):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return state


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads))


def clip_grad_norm(
    grads: Sequence[np.ndarray], max_norm: float
) -> tuple[list[np.ndarray], float]:
    """Scale gradients so their global L2 norm is at most max_norm."""
    norm = global_norm(grads)
    if not math.isfinite(norm):
        raise NonFiniteError(f"gradient norm is {norm}")
    if max_norm <= 0 or norm <= max_norm:
        return list(grads), norm
    scale = max_norm / norm
    return [g * scale for g in grads], norm


class OneCycleSchedule(BaseModel):
    """Linear warm-up to max_lr, then cosine annealing to initial_lr * final_lr_fraction."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    initial_lr: float = Field(default=1e-4, gt=0, allow_inf_nan=False)
    max_lr: float | None = Field(default=None, gt=0, allow_inf_nan=False)
    total_steps: int = Field(ge=1)
    warmup_fraction: float = Field(default=0.3, gt=0, lt=1)
    final_lr_fraction: float = Field(default=0.04, gt=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _check_peak(self) -> OneCycleSchedule:
        if self.max_lr is not None and self.max_lr < self.initial_lr:
            raise ValueError(f"max_lr {self.max_lr} is below initial_lr {self.initial_lr}")
        return self

    @property
    def peak_lr(self) -> float:
        return self.max_lr if self.max_lr is not None else 10.0 * self.initial_lr

    @property
    def warmup_steps(self) -> float:
        return self.warmup_fraction * self.total_steps

    def lr(self, step: int) -> float:
        return one_cycle_lr(self, step)


def one_cycle_lr(schedule: OneCycleSchedule, step: int) -> float:
    """Learning rate at `step` (0 <= step <= total_steps)."""
    if not 0 <= step <= schedule.total_steps:
        raise ValueError(f"step {step} outside [0, {schedule.total_steps}]")
    peak = schedule.peak_lr
    warm = schedule.warmup_steps
    if step <= warm:
        frac = step / warm
        return schedule.initial_lr * (1.0 - frac) + peak * frac
    final = schedule.initial_lr * schedule.final_lr_fraction
    progress = (step - warm) / (schedule.total_steps - warm)
    return final + (peak - final) * 0.5 * (1.0 + math.cos(math.pi * progress))


@dataclass
class Optimizer:
    """Adam over a fixed parameter list, driven by a one-cycle schedule."""

    params: list[Tensor2D]
    schedule: OneCycleSchedule
    max_grad_norm: float = 1.0
    state: AdamState = field(init=False)
    last_lr: float = field(init=False, default=0.0)
    last_norm: float = field(init=False, default=0.0)

    def __post_init__(self) -> None:
        self.state = AdamState.for_params(self.params)

    def step(self, grads: dict[Tensor2D, np.ndarray]) -> None:
        ordered = [grads.get(p, np.zeros_like(p.data)) for p in self.params]
        clipped, self.last_norm = clip_grad_norm(ordered, self.max_grad_norm)
        self.last_lr = one_cycle_lr(self.schedule, min(self.state.step, self.schedule.total_steps))
        adam_step(self.params, clipped, self.state, self.last_lr)
