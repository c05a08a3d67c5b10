"""
Dense 2-D tensors with a linear gradient tape.

Operations executed inside `with Tape() as tape:` are recorded when any input
requires a gradient; outside a tape nothing is recorded. `backward(tape, loss)`
walks the tape once in reverse and then consumes it.

No broadcasting: every operand shape is explicit, the only exception being the
(rows x 1) bias of add_bias.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from contextvars import ContextVar, Token
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import expit

from cqdd.errors import NonFiniteError, ShapeError, TapeError

Backward = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_active_tape: ContextVar[Tape | None] = ContextVar("cqdd_active_tape", default=None)


class Tensor2D:
    """Row-major float64 matrix, optionally tracked for gradients."""

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(self, data: Any, requires_grad: bool = False, name: str = "") -> None:
        array = np.array(data, dtype=np.float64)
        if array.ndim == 0:
            array = array.reshape(1, 1)
        if array.ndim != 2 or array.size == 0:
            raise ShapeError(f"Tensor2D needs a non-empty 2-D array, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise NonFiniteError(f"tensor {name or '<unnamed>'} holds non-finite values")
        self.data = array
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    @classmethod
    def zeros(cls, rows: int, cols: int, requires_grad: bool = False, name: str = "") -> Tensor2D:
        return cls(np.zeros((rows, cols)), requires_grad=requires_grad, name=name)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.data.shape[0], self.data.shape[1])

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def cols(self) -> int:
        return int(self.data.shape[1])

    def item(self) -> float:
        if self.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"Tensor2D{label}(shape={self.shape}, requires_grad={self.requires_grad})"


@dataclass
class _Node:
    op: str
    output: Tensor2D
    inputs: tuple[Tensor2D, ...]
    backward: Backward


class Tape:
    """Ordered record of the primitives executed while it is active."""

    def __init__(self) -> None:
        self._nodes: list[_Node] = []
        self._token: Token[Tape | None] | None = None
        self.consumed = False

    def __enter__(self) -> Tape:
        if self._token is not None:
            raise TapeError("tape is already active")
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc: object) -> None:
        if self._token is not None:
            _active_tape.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        return len(self._nodes)

    def record(self, node: _Node) -> None:
        if self.consumed:
            raise TapeError("cannot record on a consumed tape; start a new one")
        self._nodes.append(node)

    @property
    def ops(self) -> list[str]:
        return [n.op for n in self._nodes]


def active_tape() -> Tape | None:
    return _active_tape.get()


def _emit(op: str, value: np.ndarray, inputs: tuple[Tensor2D, ...], backward: Backward) -> Tensor2D:
    if not np.all(np.isfinite(value)):
        raise NonFiniteError(f"{op} produced non-finite values")
    requires = any(t.requires_grad for t in inputs)
    out = Tensor2D.__new__(Tensor2D)
    out.data = value
    out.requires_grad = requires
    out.grad = None
    out.name = op
    tape = _active_tape.get()
    if tape is not None and requires:
        tape.record(_Node(op, out, inputs, backward))
    return out


def _same_shape(op: str, a: Tensor2D, b: Tensor2D) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


def matmul(a: Tensor2D, b: Tensor2D) -> Tensor2D:
    if a.cols != b.rows:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
    return _emit(
        "matmul", a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g)
    )


def add_bias(x: Tensor2D, bias: Tensor2D) -> Tensor2D:
    """x + bias with bias (rows x 1) repeated across columns."""
    if bias.shape != (x.rows, 1):
        raise ShapeError(f"add_bias: bias {bias.shape} does not fit {x.shape}")
    return _emit(
        "add_bias", x.data + bias.data, (x, bias), lambda g: (g, g.sum(axis=1, keepdims=True))
    )


def add(a: Tensor2D, b: Tensor2D) -> Tensor2D:
    _same_shape("add", a, b)
    return _emit("add", a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor2D, b: Tensor2D) -> Tensor2D:
    _same_shape("sub", a, b)
    return _emit("sub", a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Tensor2D, b: Tensor2D) -> Tensor2D:
    """Elementwise product."""
    _same_shape("mul", a, b)
    return _emit("mul", a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def sigmoid(x: Tensor2D) -> Tensor2D:
    y = expit(x.data)
    return _emit("sigmoid", y, (x,), lambda g: (g * y * (1.0 - y),))


def tanh(x: Tensor2D) -> Tensor2D:
    y = np.tanh(x.data)
    return _emit("tanh", y, (x,), lambda g: (g * (1.0 - y * y),))


def concat_rows(tensors: Sequence[Tensor2D]) -> Tensor2D:
    """Stack tensors with equal column counts on top of each other."""
    if not tensors:
        raise ShapeError("concat_rows needs at least one tensor")
    cols = tensors[0].cols
    if any(t.cols != cols for t in tensors):
        raise ShapeError(f"concat_rows: column counts {[t.cols for t in tensors]} differ")
    bounds = np.cumsum([0] + [t.rows for t in tensors])

    def backward(g: np.ndarray) -> list[np.ndarray]:
        return [g[bounds[i] : bounds[i + 1]] for i in range(len(tensors))]

    return _emit("concat_rows", np.vstack([t.data for t in tensors]), tuple(tensors), backward)


def slice_rows(x: Tensor2D, start: int, stop: int) -> Tensor2D:
    if not 0 <= start < stop <= x.rows:
        raise ShapeError(f"slice_rows: [{start}:{stop}] out of range for {x.rows} rows")

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        full = np.zeros_like(x.data)
        full[start:stop] = g
        return (full,)

    return _emit("slice_rows", x.data[start:stop].copy(), (x,), backward)


def mse_loss(pred: Tensor2D, target: Tensor2D) -> Tensor2D:
    """Mean squared error as a 1x1 tensor."""
    _same_shape("mse_loss", pred, target)
    diff = pred.data - target.data
    scale = 2.0 / diff.size

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        d = g[0, 0] * scale * diff
        return (d, -d)

    return _emit("mse_loss", np.array([[np.mean(diff * diff)]]), (pred, target), backward)


def backward(tape: Tape, loss: Tensor2D) -> dict[Tensor2D, np.ndarray]:
    """
    Reverse pass over `tape` from a scalar loss.

    Returns the gradient of every tracked leaf tensor (and stores it in .grad).
    The tape is consumed; a second call raises TapeError.
    """
    if tape.consumed:
        raise TapeError("backward already ran on this tape; run the forward pass again")
    if loss.shape != (1, 1):
        raise ShapeError(f"backward needs a scalar (1x1) loss, got {loss.shape}")
    if not tape._nodes:
        raise TapeError("tape is empty; nothing requires a gradient")

    grads: dict[int, np.ndarray] = {id(loss): np.ones((1, 1))}
    produced: set[int] = set()
    leaves: dict[int, Tensor2D] = {}
    for node in reversed(tape._nodes):
        produced.add(id(node.output))
        upstream = grads.pop(id(node.output), None)
        if upstream is None:
            continue
        for tensor, grad in zip(node.inputs, node.backward(upstream)):
            if grad is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            grads[key] = grads[key] + grad if key in grads else grad
            leaves.setdefault(key, tensor)

    result: dict[Tensor2D, np.ndarray] = {}
    for key, grad in grads.items():
        if key in produced or key not in leaves:
            continue
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError(f"non-finite gradient for {leaves[key]!r}")
        tensor = leaves[key]
        tensor.grad = grad
        result[tensor] = grad

    tape._nodes.clear()
    tape.consumed = True
    return result
