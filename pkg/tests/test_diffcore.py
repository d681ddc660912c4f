"""Autodiff engine: forward values against frozen oracles, gradients
against central finite differences, Adam against its closed first step."""

import math

import numpy as np
import pytest

from aopf.diffcore import (
    AdamState,
    Tape,
    Tensor,
    adam_step,
    add_bias,
    clamp_min,
    combine,
    dropout,
    layer_norm,
    masked_softmax_cross_entropy,
    matmul,
    mul,
    numerical_gradient,
    relu,
    scalar,
    sum_all,
    zero_grads,
)
from aopf.errors import (
    EmptyMaskError,
    InvalidProbabilityError,
    LabelOutOfRangeError,
    NonScalarLossError,
    ShapeMismatchError,
)
from oracles import layer_norm_rows, masked_ce


def test_tensor_promotion_and_item():
    assert Tensor(3.0).shape == (1, 1)
    assert Tensor([1.0, 2.0]).shape == (1, 2)
    assert scalar(2.5).item() == 2.5
    with pytest.raises(ShapeMismatchError):
        Tensor(np.zeros((2, 2, 2)))
    with pytest.raises(ShapeMismatchError):
        Tensor(np.zeros((2, 3))).item()


# --- forward values ---------------------------------------------------------


def test_matmul_examples():
    b = Tensor([[5.0, 6.0], [7.0, 8.0]])
    assert np.array_equal(matmul(Tensor(np.eye(2)), b).data, b.data)
    m = matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor(np.eye(2)))
    assert np.array_equal(m.data, [[1.0, 2.0], [3.0, 4.0]])
    assert matmul(Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]])).data[0, 0] == 11.0
    with pytest.raises(ShapeMismatchError):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_layer_norm_rows():
    out = layer_norm(Tensor([[1.0, 1.0, 1.0]]))
    assert np.array_equal(out.data, np.zeros((1, 3)))

    expected = 1.0 / math.sqrt(1.0 + 1e-5)
    for row in ([1.0, -1.0], [2.0, 0.0]):
        out = layer_norm(Tensor([row]))
        assert out.data[0, 0] == pytest.approx(expected, abs=1e-12)
        assert out.data[0, 1] == pytest.approx(-expected, abs=1e-12)


def test_layer_norm_statistics_and_oracle(rng):
    x = rng.normal(size=(40, 17))
    out = layer_norm(Tensor(x)).data
    np.testing.assert_allclose(out, layer_norm_rows(x), atol=1e-12)
    assert np.max(np.abs(out.mean(axis=1))) <= 1e-12
    assert np.max(np.abs(out.var(axis=1) - 1.0)) <= 1e-4


def test_relu_values():
    out = relu(Tensor([[-1.0, 2.0]]))
    assert np.array_equal(out.data, [[0.0, 2.0]])
    assert np.array_equal(relu(Tensor([[-3.0, -0.5]])).data, [[0.0, 0.0]])


def test_dropout_identity_paths(rng):
    x = Tensor([[1.0, -2.0, 3.0]])
    assert dropout(x, 0.0, training=True, rng=rng) is x
    assert dropout(x, 0.5, training=False, rng=rng) is x
    for p in (-0.1, 1.0, 1.5):
        with pytest.raises(InvalidProbabilityError):
            dropout(x, p, training=True, rng=rng)


def test_dropout_expectation(rng):
    x = Tensor([[1.0, -2.0, 0.5]])
    total = np.zeros((1, 3))
    draws = 100_000
    for _ in range(draws):
        total += dropout(x, 0.5, training=True, rng=rng).data
    np.testing.assert_allclose(total / draws, x.data, rtol=0.02)


def test_masked_cross_entropy_values():
    one = masked_softmax_cross_entropy(Tensor([[0.0, 0.0]]), np.array([0]), [0])
    assert one.item() == pytest.approx(math.log(2.0), abs=1e-12)

    confident = masked_softmax_cross_entropy(Tensor([[100.0, 0.0]]), np.array([0]), [0])
    assert confident.item() < 1e-9

    pair = masked_softmax_cross_entropy(
        Tensor([[0.0, 0.0], [100.0, 0.0]]), np.array([0, 0]), [0, 1]
    )
    assert pair.item() == pytest.approx(math.log(2.0) / 2.0, abs=1e-9)
    assert pair.item() == pytest.approx(0.346574, abs=1e-6)


def test_masked_cross_entropy_oracle(rng):
    logits = rng.normal(size=(12, 4))
    labels = rng.integers(0, 4, size=12)
    mask = np.array([0, 3, 5, 11])
    ours = masked_softmax_cross_entropy(Tensor(logits), labels, mask).item()
    assert ours == pytest.approx(masked_ce(logits, labels, mask), abs=1e-12)


def test_masked_cross_entropy_errors():
    logits = Tensor(np.zeros((3, 2)))
    with pytest.raises(EmptyMaskError):
        masked_softmax_cross_entropy(logits, np.array([0, 0, 0]), [])
    with pytest.raises(LabelOutOfRangeError):
        masked_softmax_cross_entropy(logits, np.array([0, 2, 0]), [1])


# --- gradients ---------------------------------------------------------------


def _fd_check(build_loss, params, tol=1e-6, h=1e-5):
    """Analytic gradients of build_loss() vs central differences."""
    with Tape() as tape:
        loss = build_loss()
        zero_grads(params)
        tape.backward(loss)
    analytic = [p.grad.copy() for p in params]

    for p, a in zip(params, analytic):
        numeric = numerical_gradient(lambda: build_loss().item(), p, h=h)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(numeric)), 1e-3)
        assert np.max(np.abs(a - numeric) / denom) <= tol


def test_backward_sum_is_ones():
    w = Tensor(np.arange(4.0).reshape(2, 2), requires_grad=True)
    with Tape() as tape:
        loss = sum_all(w)
        tape.backward(loss)
    assert np.array_equal(w.grad, np.ones((2, 2)))


def test_backward_requires_scalar():
    w = Tensor(np.ones((2, 2)), requires_grad=True)
    with Tape() as tape:
        out = mul(w, w)
        with pytest.raises(NonScalarLossError):
            tape.backward(out)


def test_matmul_gradients(rng):
    a = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
    b = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
    _fd_check(lambda: sum_all(matmul(a, b)), [a, b])


def test_mixed_graph_gradients(rng):
    """relu, layer_norm, combine, clamp_min, bias and scalar arithmetic."""
    x = Tensor(rng.normal(size=(5, 4)), requires_grad=True)
    y = Tensor(rng.normal(size=(5, 4)), requires_grad=True)
    bias = Tensor(rng.normal(size=(1, 4)), requires_grad=True)
    s = scalar(0.7, requires_grad=True)

    def build():
        c = combine([x, y], [s, 1.25])
        c = layer_norm(c)
        c = relu(add_bias(c, bias))
        t = clamp_min(s * 2.0 - 0.3, -0.9)
        return sum_all(c) * t

    _fd_check(build, [x, y, bias, s], tol=1e-5)


def test_combine_matches_manual_sum(rng):
    x = Tensor(rng.normal(size=(4, 3)))
    y = Tensor(rng.normal(size=(4, 3)))
    z = Tensor(rng.normal(size=(4, 3)))
    out = combine([x, y, z], [0.5, -1.5, 2.0])
    np.testing.assert_allclose(out.data, 0.5 * x.data - 1.5 * y.data + 2.0 * z.data, atol=1e-15)
    with pytest.raises(ShapeMismatchError):
        combine([x, Tensor(np.zeros((2, 2)))], [1.0, 1.0])
    with pytest.raises(ShapeMismatchError):
        combine([], [])


def test_relu_gradient_at_half(rng):
    x = Tensor(np.array([[0.5, -0.5]]), requires_grad=True)
    r = Tensor(rng.normal(size=(1, 2)))
    _fd_check(lambda: sum_all(mul(relu(x), r)), [x], tol=1e-6)


def test_dropout_gradient_is_mask(rng):
    x = Tensor(np.ones((4, 4)), requires_grad=True)
    with Tape() as tape:
        out = dropout(x, 0.5, training=True, rng=np.random.default_rng(3))
        tape.backward(sum_all(out))
    mask = np.where(out.data != 0.0, 2.0, 0.0)
    assert np.array_equal(x.grad, mask)


def test_unused_branch_gets_no_gradient():
    a = Tensor(np.ones((2, 2)), requires_grad=True)
    b = Tensor(np.ones((2, 2)), requires_grad=True)
    with Tape() as tape:
        _unused = mul(b, b)
        loss = sum_all(mul(a, a))
        tape.backward(loss)
    assert b.grad is None and a.grad is not None


def test_gradient_accumulates_across_uses():
    a = Tensor(np.full((1, 1), 3.0), requires_grad=True)
    with Tape() as tape:
        loss = sum_all(mul(a, a))  # d(a^2)/da = 2a
        tape.backward(loss)
    assert a.grad[0, 0] == pytest.approx(6.0)


# --- optimizer ---------------------------------------------------------------


def test_adam_first_step_closed_form():
    p = Tensor(np.zeros((1, 1)), requires_grad=True)
    p.grad = np.ones((1, 1))
    state = AdamState([p], lr=0.1)
    adam_step(state)
    expected = -0.1 * (1.0 / (1.0 + 1e-8))
    assert p.data[0, 0] == pytest.approx(expected, abs=1e-15)


def test_adam_zero_gradient_is_fixed_point():
    p = Tensor(np.full((2, 2), 1.5), requires_grad=True)
    p.grad = np.zeros((2, 2))
    state = AdamState([p], lr=0.1, weight_decay=0.0)
    for _ in range(3):
        adam_step(state)
    assert np.array_equal(p.data, np.full((2, 2), 1.5))


def test_adam_weight_decay_pulls_toward_zero():
    p = Tensor(np.full((1, 1), 2.0), requires_grad=True)
    p.grad = np.zeros((1, 1))
    adam_step(AdamState([p], lr=0.1, weight_decay=5e-4))
    assert p.data[0, 0] < 2.0


def test_adam_skips_none_grads():
    p = Tensor(np.ones((1, 1)), requires_grad=True)
    p.grad = None
    adam_step(AdamState([p], lr=0.1))
    assert p.data[0, 0] == 1.0


def test_adam_shape_mismatch():
    p = Tensor(np.ones((2, 2)), requires_grad=True)
    state = AdamState([p], lr=0.1)
    with pytest.raises(ShapeMismatchError):
        adam_step(state, grads=[np.ones((1, 2))])


def test_training_loop_determinism():
    """50 identical optimization steps twice -> bitwise-equal loss sequences."""

    def run():
        gen = np.random.default_rng(99)
        w = Tensor(gen.normal(size=(4, 3)), requires_grad=True)
        x = Tensor(gen.normal(size=(6, 4)))
        labels = gen.integers(0, 3, size=6)
        state = AdamState([w], lr=0.05)
        losses = []
        for _ in range(50):
            with Tape() as tape:
                logits = matmul(x, w)
                loss = masked_softmax_cross_entropy(logits, labels, np.arange(6))
                zero_grads([w])
                tape.backward(loss)
            adam_step(state)
            losses.append(loss.item())
        return losses

    assert run() == run()


def test_tapes_do_not_nest():
    with Tape():
        with pytest.raises(RuntimeError):
            with Tape():
                pass
