"""
GRU and MLP torque estimators.

Each model has two forward passes over the same parameters: a taped one built
from autodiff primitives for training, and a plain numpy one (`predict_batch`,
`predict`) for evaluation and latency measurement. Activations are laid out
features x batch. A single GRU window skips the batch path and runs a wavefront
sweep over preallocated buffers.

Parameter arrays are replaced, never written in place, when a model changes;
the GRU's stacked inference weights are keyed on their identity.

GRU layer parameters, in declaration order:
    W    (3H x C_in)  input weights, rows [update z | reset r | candidate]
    U_zr (2H x H)     recurrent weights of the two gates
    U_h  (H x H)      recurrent weights of the candidate, applied to r * h
    b    (3H x 1)
followed by the head W_o (1 x H), b_o (1 x 1).
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np
from scipy.special import expit

from cqdd.autodiff.tensor import (
    Tensor2D,
    add,
    add_bias,
    matmul,
    mul,
    sigmoid,
    slice_rows,
    sub,
    tanh,
)
from cqdd.errors import ShapeError
from cqdd.models.spec import ModelKind, ModelSpec


def expected_shapes(spec: ModelSpec) -> list[tuple[int, int]]:
    """Parameter shapes of `spec` in declaration order."""
    h = spec.hidden_size
    shapes: list[tuple[int, int]] = []
    if spec.kind is ModelKind.GRU:
        for layer in range(spec.layers):
            c_in = spec.input_channels if layer == 0 else h
            shapes += [(3 * h, c_in), (2 * h, h), (h, h), (3 * h, 1)]
        shapes += [(1, h), (1, 1)]
    else:
        sizes = [spec.input_channels * spec.history] + [h] * (spec.layers - 1) + [1]
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            shapes += [(fan_out, fan_in), (fan_out, 1)]
    return shapes


def init_params(spec: ModelSpec, rng: np.random.Generator) -> list[np.ndarray]:
    """Weights uniform in +-1/sqrt(fan_in), biases zero."""
    arrays = []
    for rows, cols in expected_shapes(spec):
        if cols == 1:
            arrays.append(np.zeros((rows, 1)))
        else:
            bound = 1.0 / math.sqrt(cols)
            arrays.append(rng.uniform(-bound, bound, size=(rows, cols)))
    return arrays


class TorqueModel(ABC):
    """Parameters plus taped and numpy forward passes."""

    def __init__(self, spec: ModelSpec, arrays: Sequence[np.ndarray]) -> None:
        shapes = expected_shapes(spec)
        if len(arrays) != len(shapes):
            raise ShapeError(f"{spec.name}: expected {len(shapes)} parameters, got {len(arrays)}")
        for i, (array, shape) in enumerate(zip(arrays, shapes)):
            if tuple(np.shape(array)) != shape:
                raise ShapeError(
                    f"{spec.name}: parameter {i} has shape {np.shape(array)}, want {shape}"
                )
        self.spec = spec
        self.params = [
            Tensor2D(np.array(a, dtype=np.float64), requires_grad=True, name=f"p{i}")
            for i, a in enumerate(arrays)
        ]

    @classmethod
    def initialize(cls, spec: ModelSpec, rng: np.random.Generator) -> TorqueModel:
        return cls(spec, init_params(spec, rng))

    def arrays(self) -> list[np.ndarray]:
        """Copies of the parameter values in declaration order."""
        return [p.data.copy() for p in self.params]

    def load_arrays(self, arrays: Sequence[np.ndarray]) -> None:
        for p, a in zip(self.params, arrays, strict=True):
            if a.shape != p.data.shape:
                raise ShapeError(f"cannot load {a.shape} into {p.data.shape}")
            p.data = np.array(a, dtype=np.float64)

    def check_batch(self, windows: np.ndarray) -> np.ndarray:
        windows = np.asarray(windows, dtype=np.float64)
        if windows.ndim != 3 or windows.shape[1:] != self.spec.window_shape:
            raise ShapeError(
                f"{self.spec.name} takes windows of shape (B, {self.spec.input_channels}, "
                f"{self.spec.history}), got {windows.shape}"
            )
        return windows

    def check_window(self, window: np.ndarray) -> np.ndarray:
        window = np.asarray(window, dtype=np.float64)
        if window.shape != self.spec.window_shape:
            raise ShapeError(
                f"{self.spec.name} takes a {self.spec.window_shape} window, got {window.shape}"
            )
        return window

    def predict(self, window: np.ndarray) -> float:
        """Normalized torque for one (C, L) window."""
        return float(self.predict_batch(self.check_window(window)[np.newaxis])[0])

    @abstractmethod
    def forward(self, windows: np.ndarray) -> Tensor2D:
        """Taped forward of (B, C, L) windows to a (1, B) prediction."""

    @abstractmethod
    def predict_batch(self, windows: np.ndarray) -> np.ndarray:
        """Untaped forward of (B, C, L) windows to (B,) predictions."""


@dataclass(frozen=True, eq=False)
class Wavefront:
    """
    GRU weights stacked for a diagonal sweep over (layer, time).

    At sweep step s layer k advances timestep s - k, reading the state layer
    k - 1 reached one step earlier, so all layers move together and a window
    takes L + K - 1 steps instead of L * K. Layers outside their time range keep
    their state because their update-gate bias is -inf there.
    """

    source: tuple[np.ndarray, ...]
    weights: np.ndarray  # (K, 3H, 2H): columns [layer below | own state]
    recurrent: np.ndarray  # (K, H, H)
    input_weights: np.ndarray  # (3H, C) of the first layer
    drive: np.ndarray  # (L + K - 1, K, 3H, 1) biases and gate masks

    @classmethod
    def build(cls, spec: ModelSpec, source: tuple[np.ndarray, ...]) -> Wavefront:
        size, layers, history = spec.hidden_size, spec.layers, spec.history
        weights = np.zeros((layers, 3 * size, 2 * size))
        recurrent = np.empty((layers, size, size))
        drive = np.empty((history + layers - 1, layers, 3 * size, 1))
        for k in range(layers):
            w, u_zr, u_h, b = source[4 * k : 4 * k + 4]
            if k > 0:
                weights[k, :, :size] = w
            weights[k, : 2 * size, size:] = u_zr
            recurrent[k] = u_h
            drive[:, k] = b
            drive[:k, k, :size] = -np.inf
            drive[k + history :, k, :size] = -np.inf
        return cls(source, weights, recurrent, np.ascontiguousarray(source[0]), drive)

    def run(self, window: np.ndarray) -> np.ndarray:
        """Last layer's final hidden state (H x 1) for one (C, L) window."""
        layers, rows, width = self.weights.shape
        size = width // 2
        drive = self.drive.copy()
        drive[: window.shape[1], 0, :, 0] += (self.input_weights @ window).T

        state = np.zeros((layers, width, 1))
        pre = np.empty((layers, rows, 1))
        gates = np.empty((layers, 2 * size, 1))
        scaled = np.empty((layers, size, 1))
        candidate = np.empty((layers, size, 1))
        h = state[:, size:]
        z, r = gates[:, :size], gates[:, size:]
        pre_zr, pre_c = pre[:, : 2 * size], pre[:, 2 * size :]
        for step in drive:
            np.matmul(self.weights, state, out=pre)
            pre += step
            expit(pre_zr, out=gates)
            np.multiply(r, h, out=scaled)
            np.matmul(self.recurrent, scaled, out=candidate)
            candidate += pre_c
            np.tanh(candidate, out=candidate)
            candidate -= h
            candidate *= z
            h += candidate
            state[1:, :size] = h[:-1]
        return h[-1]


class GRUModel(TorqueModel):
    """Stacked GRU with a linear head on the last hidden state."""

    def __init__(self, spec: ModelSpec, arrays: Sequence[np.ndarray]) -> None:
        super().__init__(spec, arrays)
        self._wavefront: Wavefront | None = None

    def wavefront(self) -> Wavefront:
        """Stacked weights for `predict`, rebuilt whenever a parameter array is replaced."""
        source = tuple(p.data for p in self.params[:-2])
        cached = self._wavefront
        if cached is None or any(a is not b for a, b in zip(cached.source, source)):
            cached = self._wavefront = Wavefront.build(self.spec, source)
        return cached

    def predict(self, window: np.ndarray) -> float:
        """Normalized torque for one (C, L) window through the wavefront sweep."""
        h = self.wavefront().run(self.check_window(window))
        w_o, b_o = self.params[-2].data, self.params[-1].data
        return float((w_o @ h)[0, 0] + b_o[0, 0])

    def _layer(self, k: int) -> tuple[Tensor2D, Tensor2D, Tensor2D, Tensor2D]:
        w, u_zr, u_h, b = self.params[4 * k : 4 * k + 4]
        return w, u_zr, u_h, b

    def cell(self, x: Tensor2D, h: Tensor2D, layer: int) -> Tensor2D:
        """One taped recurrence step; x is (C_in x B), h is (H x B)."""
        size = self.spec.hidden_size
        w, u_zr, u_h, b = self._layer(layer)
        gx = add_bias(matmul(w, x), b)
        zr = sigmoid(add(slice_rows(gx, 0, 2 * size), matmul(u_zr, h)))
        z = slice_rows(zr, 0, size)
        r = slice_rows(zr, size, 2 * size)
        candidate = tanh(add(slice_rows(gx, 2 * size, 3 * size), matmul(u_h, mul(r, h))))
        return add(h, mul(z, sub(candidate, h)))

    def forward(self, windows: np.ndarray) -> Tensor2D:
        windows = self.check_batch(windows)
        batch = windows.shape[0]
        sequence = [Tensor2D(windows[:, :, t].T) for t in range(self.spec.history)]
        h = Tensor2D.zeros(self.spec.hidden_size, batch)
        for layer in range(self.spec.layers):
            h = Tensor2D.zeros(self.spec.hidden_size, batch)
            outputs = []
            for x in sequence:
                h = self.cell(x, h, layer)
                outputs.append(h)
            sequence = outputs
        w_o, b_o = self.params[-2:]
        return add_bias(matmul(w_o, h), b_o)

    def predict_batch(self, windows: np.ndarray) -> np.ndarray:
        windows = self.check_batch(windows)
        size = self.spec.hidden_size
        batch = windows.shape[0]
        sequence = [windows[:, :, t].T for t in range(self.spec.history)]
        h = np.zeros((size, batch))
        for layer in range(self.spec.layers):
            w, u_zr, u_h, b = (p.data for p in self._layer(layer))
            h = np.zeros((size, batch))
            outputs = []
            for x in sequence:
                gx = w @ x + b
                zr = expit(gx[: 2 * size] + u_zr @ h)
                z, r = zr[:size], zr[size:]
                candidate = np.tanh(gx[2 * size :] + u_h @ (r * h))
                h = h + z * (candidate - h)
                outputs.append(h)
            sequence = outputs
        w_o, b_o = self.params[-2].data, self.params[-1].data
        return (w_o @ h + b_o)[0]


def flatten_windows(windows: np.ndarray) -> np.ndarray:
    """(B, C, L) windows to (L*C, B) columns, time-major: row t*C + c."""
    batch = windows.shape[0]
    return windows.transpose(0, 2, 1).reshape(batch, -1).T


class MLPModel(TorqueModel):
    """Dense layers with tanh hidden activations and a linear output."""

    def forward(self, windows: np.ndarray) -> Tensor2D:
        windows = self.check_batch(windows)
        x = Tensor2D(flatten_windows(windows))
        pairs = len(self.params) // 2
        for i in range(pairs):
            w, b = self.params[2 * i], self.params[2 * i + 1]
            x = add_bias(matmul(w, x), b)
            if i < pairs - 1:
                x = tanh(x)
        return x

    def predict_batch(self, windows: np.ndarray) -> np.ndarray:
        windows = self.check_batch(windows)
        x = flatten_windows(windows)
        pairs = len(self.params) // 2
        for i in range(pairs):
            x = self.params[2 * i].data @ x + self.params[2 * i + 1].data
            if i < pairs - 1:
                x = np.tanh(x)
        return x[0]


def build_model(
    spec: ModelSpec,
    arrays: Sequence[np.ndarray] | None = None,
    rng: np.random.Generator | None = None,
) -> TorqueModel:
    """Model of the right kind; fresh initialization unless arrays are given."""
    cls: type[TorqueModel] = GRUModel if spec.kind is ModelKind.GRU else MLPModel
    if arrays is None:
        if rng is None:
            raise ValueError("build_model needs either arrays or an rng")
        return cls.initialize(spec, rng)
    return cls(spec, arrays)
