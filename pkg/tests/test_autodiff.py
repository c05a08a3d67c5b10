"""
Tests for the gradient tape, Adam and the one-cycle schedule.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np
import pytest

from cqdd.autodiff.optim import (
    AdamState,
    OneCycleSchedule,
    adam_step,
    clip_grad_norm,
    global_norm,
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
from cqdd.errors import NonFiniteError, ShapeError, TapeError

LossFn = Callable[[Sequence[Tensor2D]], Tensor2D]


def numeric_gradient(
    fn: LossFn, arrays: list[np.ndarray], which: int, eps: float = 1e-6
) -> np.ndarray:
    """Central differences of fn with respect to arrays[which]."""
    grad = np.zeros_like(arrays[which])
    for idx in np.ndindex(grad.shape):
        values = [a.copy() for a in arrays]
        values[which][idx] += eps
        up = fn([Tensor2D(v) for v in values]).item()
        values[which][idx] -= 2 * eps
        down = fn([Tensor2D(v) for v in values]).item()
        grad[idx] = (up - down) / (2 * eps)
    return grad


def tape_gradients(fn: LossFn, arrays: list[np.ndarray]) -> list[np.ndarray]:
    tensors = [Tensor2D(a, requires_grad=True) for a in arrays]
    with Tape() as tape:
        loss = fn(tensors)
    grads = backward(tape, loss)
    return [grads[t] for t in tensors]


def gated_step(t: Sequence[Tensor2D]) -> Tensor2D:
    """A GRU-shaped expression touching every primitive."""
    w, x, b, h, target = t
    gx = add_bias(matmul(w, x), b)
    gates = sigmoid(slice_rows(gx, 0, 4))
    z, r = slice_rows(gates, 0, 2), slice_rows(gates, 2, 4)
    candidate = tanh(add(slice_rows(gx, 4, 6), mul(r, h)))
    out = add(h, mul(z, sub(candidate, h)))
    stacked = concat_rows([out, h])
    return mse_loss(stacked, target)


class TestGradients:
    """Tape gradients against central differences."""

    @pytest.fixture
    def arrays(self) -> list[np.ndarray]:
        rng = np.random.default_rng(7)
        return [
            rng.normal(size=(6, 3)),
            rng.normal(size=(3, 5)),
            rng.normal(size=(6, 1)),
            rng.normal(size=(2, 5)),
            rng.normal(size=(4, 5)),
        ]

    @pytest.mark.parametrize("which", [0, 1, 2, 3, 4])
    def test_matches_finite_differences(self, arrays: list[np.ndarray], which: int) -> None:
        analytic = tape_gradients(gated_step, arrays)[which]
        numeric = numeric_gradient(gated_step, arrays, which)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)

    def test_shared_input_accumulates(self) -> None:
        """x used twice gets both contributions."""
        x = np.array([[1.5, -0.5]])

        def square(t: Sequence[Tensor2D]) -> Tensor2D:
            return mse_loss(mul(t[0], t[0]), Tensor2D(np.zeros((1, 2))))

        (grad,) = tape_gradients(square, [x])
        # d/dx mean(x^4) = 4 x^3 / n
        np.testing.assert_allclose(grad, 4 * x**3 / 2)


class TestTape:
    """Tape lifecycle and recording rules."""

    def test_records_only_tracked_ops(self) -> None:
        a = Tensor2D(np.ones((2, 2)), requires_grad=True)
        c = Tensor2D(np.ones((2, 2)))
        with Tape() as tape:
            add(c, c)
            add(a, c)
        assert tape.ops == ["add"]

    def test_nothing_recorded_outside(self) -> None:
        tape = Tape()
        a = Tensor2D(np.ones((2, 2)), requires_grad=True)
        add(a, a)
        assert len(tape) == 0

    def test_backward_consumes(self) -> None:
        a = Tensor2D(np.ones((1, 3)), requires_grad=True)
        with Tape() as tape:
            loss = mse_loss(a, Tensor2D(np.zeros((1, 3))))
        backward(tape, loss)
        with pytest.raises(TapeError):
            backward(tape, loss)

    def test_backward_needs_scalar(self) -> None:
        a = Tensor2D(np.ones((2, 2)), requires_grad=True)
        with Tape() as tape:
            out = add(a, a)
        with pytest.raises(ShapeError):
            backward(tape, out)

    def test_empty_tape(self) -> None:
        with Tape() as tape:
            loss = mse_loss(Tensor2D(np.ones((1, 2))), Tensor2D(np.zeros((1, 2))))
        with pytest.raises(TapeError):
            backward(tape, loss)

    def test_nested_activation_rejected(self) -> None:
        tape = Tape()
        with tape:
            with pytest.raises(TapeError):
                tape.__enter__()


class TestTensor:
    def test_shape_checks(self) -> None:
        with pytest.raises(ShapeError):
            matmul(Tensor2D(np.ones((2, 3))), Tensor2D(np.ones((2, 3))))
        with pytest.raises(ShapeError):
            add(Tensor2D(np.ones((2, 3))), Tensor2D(np.ones((3, 2))))
        with pytest.raises(ShapeError):
            add_bias(Tensor2D(np.ones((2, 3))), Tensor2D(np.ones((3, 1))))
        with pytest.raises(ShapeError):
            slice_rows(Tensor2D(np.ones((2, 3))), 1, 3)

    def test_rejects_non_finite(self) -> None:
        with pytest.raises(NonFiniteError):
            Tensor2D(np.array([[1.0, np.inf]]))

    def test_scalar_promoted(self) -> None:
        assert Tensor2D(2.5).item() == 2.5


class TestOptimizer:
    """Adam, clipping and the learning-rate schedule."""

    def test_first_adam_step_moves_by_lr(self) -> None:
        p = Tensor2D(np.array([[1.0, -1.0, 0.5]]), requires_grad=True)
        state = AdamState.for_params([p])
        adam_step([p], [np.array([[2.0, -3.0, 0.1]])], state, lr=0.01)
        np.testing.assert_allclose(p.data, [[0.99, -0.99, 0.49]], atol=1e-6)
        assert state.step == 1

    def test_adam_rejects_mismatch(self) -> None:
        p = Tensor2D(np.ones((1, 2)), requires_grad=True)
        with pytest.raises(ShapeError):
            adam_step([p], [np.ones((2, 1))], AdamState.for_params([p]), lr=0.1)

    def test_clip_scales_to_max_norm(self) -> None:
        grads = [np.array([[3.0]]), np.array([[4.0]])]
        clipped, norm = clip_grad_norm(grads, 1.0)
        assert norm == 5.0
        np.testing.assert_allclose([g[0, 0] for g in clipped], [0.6, 0.8])

    def test_clip_leaves_small_gradients(self) -> None:
        grads = [np.array([[0.3]])]
        clipped, _ = clip_grad_norm(grads, 1.0)
        assert clipped[0] is grads[0]

    def test_constant_gradient_moves_by_lr_every_step(self) -> None:
        p = Tensor2D(np.array([[0.0, 0.0]]), requires_grad=True)
        state = AdamState.for_params([p])
        grad = np.array([[0.5, -2.0]])
        for _ in range(50):
            before = p.data.copy()
            adam_step([p], [grad], state, lr=0.01)
            np.testing.assert_allclose(p.data - before, [[-0.01, 0.01]], rtol=1e-6)
        np.testing.assert_allclose(state.first[0] / (1 - state.beta1**state.step), grad)
        np.testing.assert_allclose(state.second[0] / (1 - state.beta2**state.step), grad**2)

    def test_adam_is_odd_in_the_gradient(self) -> None:
        rng = np.random.default_rng(4)
        start = rng.normal(size=(3, 2))
        plus = Tensor2D(start.copy(), requires_grad=True)
        minus = Tensor2D(start.copy(), requires_grad=True)
        plus_state, minus_state = AdamState.for_params([plus]), AdamState.for_params([minus])
        for _ in range(10):
            grad = rng.normal(size=(3, 2))
            adam_step([plus], [grad], plus_state, lr=0.05)
            adam_step([minus], [-grad], minus_state, lr=0.05)
        np.testing.assert_allclose(plus.data - start, start - minus.data, atol=1e-15)

    @pytest.mark.parametrize("seed", range(20))
    def test_clipped_updates_stay_finite(self, seed: int) -> None:
        rng = np.random.default_rng(seed)
        params = [
            Tensor2D(rng.normal(size=shape), requires_grad=True) for shape in [(4, 3), (4, 1)]
        ]
        state = AdamState.for_params(params)
        for _ in range(5):
            scale = 10.0 ** rng.uniform(-3.0, 12.0)
            grads = [scale * rng.normal(size=p.data.shape) for p in params]
            clipped, norm = clip_grad_norm(grads, 1.0)
            assert norm == pytest.approx(global_norm(grads))
            assert global_norm(clipped) <= 1.0 + 1e-9
            before = [p.data.copy() for p in params]
            adam_step(params, clipped, state, lr=0.1)
            for p, b in zip(params, before):
                assert np.all(np.isfinite(p.data))
                # Adam never moves a coordinate much further than lr per step.
                assert np.max(np.abs(p.data - b)) < 0.1 * 40

    def test_clip_rejects_non_finite(self) -> None:
        with pytest.raises(NonFiniteError):
            clip_grad_norm([np.array([[np.inf]])], 1.0)

    def test_one_cycle_shape(self) -> None:
        schedule = OneCycleSchedule(initial_lr=1e-4, total_steps=100)
        assert one_cycle_lr(schedule, 0) == pytest.approx(1e-4)
        assert one_cycle_lr(schedule, 30) == pytest.approx(1e-3)
        assert one_cycle_lr(schedule, 100) == pytest.approx(4e-6)
        rates = [schedule.lr(s) for s in range(101)]
        assert max(rates) == pytest.approx(1e-3)
        assert all(a >= b for a, b in zip(rates[30:], rates[31:]))

    def test_one_cycle_explicit_peak(self) -> None:
        schedule = OneCycleSchedule(initial_lr=1e-3, max_lr=5e-3, total_steps=10)
        assert schedule.lr(3) == pytest.approx(5e-3)

    def test_one_cycle_rejects_low_peak(self) -> None:
        with pytest.raises(ValueError):
            OneCycleSchedule(initial_lr=1e-3, max_lr=1e-4, total_steps=10)

    def test_one_cycle_step_range(self) -> None:
        schedule = OneCycleSchedule(total_steps=10)
        with pytest.raises(ValueError):
            schedule.lr(11)
