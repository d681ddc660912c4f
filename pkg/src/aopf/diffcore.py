"""Reverse-mode autodiff over dense 2-D float64 arrays, plus Adam.

A Tape records every differentiable op in execution order while it is
active; backward() replays the records once, in reverse.  Tensors are
plain containers: data, a lazily-allocated grad buffer, and a flag.
Everything is float64 and 2-D (scalars are (1, 1)) so that results are
bit-reproducible across runs of the same seed.

Ops never mutate their inputs.  Gradient buffers of intermediates are
dropped as soon as the backward sweep has consumed them, which keeps the
peak footprint close to the forward one.
"""

from __future__ import annotations

import threading
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    EmptyMaskError,
    IndexOutOfRangeError,
    InvalidProbabilityError,
    LabelOutOfRangeError,
    NonScalarLossError,
    ShapeMismatchError,
)

LAYER_NORM_EPS = 1e-5
ADAM_EPS = 1e-8

_tls = threading.local()


def _active_tape() -> "Tape | None":
    return getattr(_tls, "tape", None)


class Tensor:
    """A 2-D float64 array with an optional gradient buffer.

    0-D and 1-D inputs are promoted to (1, 1) and (1, n).  Data is treated
    as immutable once wrapped; the optimizer swaps buffers instead of
    writing into them.
    """

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeMismatchError(f"tensors are 2-D, got shape {arr.shape}")
        self.data = np.ascontiguousarray(arr)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.shape != (1, 1):
            raise ShapeMismatchError(f"item() needs a (1, 1) tensor, got {self.data.shape}")
        return float(self.data[0, 0])

    def detach(self) -> "Tensor":
        """A view of the same data outside the gradient graph."""
        out = Tensor.__new__(Tensor)
        out.data = self.data
        out.requires_grad = False
        out.grad = None
        return out

    def _drop_data(self) -> None:
        # Free the forward buffer of a consumed intermediate.  Only valid
        # once no later op will read .data (backward reads grads, and the
        # ops below capture what they need in their closures).
        self.data = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # scalar-style arithmetic; used for recurrence coefficients, so these
    # accept Python numbers and lift them to constant tensors
    def __add__(self, other):
        return add(self, _coerce(other, self))

    def __radd__(self, other):
        return add(_coerce(other, self), self)

    def __sub__(self, other):
        return sub(self, _coerce(other, self))

    def __rsub__(self, other):
        return sub(_coerce(other, self), self)

    def __mul__(self, other):
        return mul(self, _coerce(other, self))

    def __rmul__(self, other):
        return mul(_coerce(other, self), self)

    def __truediv__(self, other):
        return div(self, _coerce(other, self))

    def __rtruediv__(self, other):
        return div(_coerce(other, self), self)

    def __neg__(self):
        return mul(self, Tensor(np.full_like(self.data, -1.0)))


def _coerce(x, like: Tensor) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.full_like(like.data, float(x)))


def scalar(value: float, requires_grad: bool = False) -> Tensor:
    """Wrap a Python number as a (1, 1) tensor."""
    return Tensor(np.array([[float(value)]]), requires_grad=requires_grad)


class Tape:
    """Execution-order op recorder; one backward sweep per recording.

    Use as a context manager around the forward pass.  Tapes do not nest;
    each thread has at most one active tape, so independent runs may
    execute on separate threads.
    """

    def __init__(self):
        self._entries: list[tuple[Tensor, Callable[[np.ndarray], None]]] = []

    def __enter__(self) -> "Tape":
        if _active_tape() is not None:
            raise RuntimeError("a tape is already active on this thread")
        _tls.tape = self
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        _tls.tape = None
        return False

    def record(self, out: Tensor, pull: Callable[[np.ndarray], None]) -> None:
        self._entries.append((out, pull))

    def backward(self, loss: Tensor) -> None:
        """Accumulate d loss / d leaf into every recorded leaf's .grad.

        The sweep walks the records in reverse exactly once; gradient
        buffers of intermediates are released as soon as their producing
        record has pulled them back.
        """
        if loss.data is None or loss.data.shape != (1, 1):
            raise NonScalarLossError("backward() expects a (1, 1) loss tensor")
        loss.grad = np.ones((1, 1))
        for out, pull in reversed(self._entries):
            g = out.grad
            if g is None:
                continue  # branch not reachable from the loss
            pull(g)
            out.grad = None  # intermediate grads are dead after their pull


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g.copy()
    else:
        t.grad += g


def _finish(out_data: np.ndarray, inputs: Iterable[Tensor], pull) -> Tensor:
    """Wrap an op result, recording `pull` if anything upstream needs grads."""
    tape = _active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out = Tensor(out_data, requires_grad=True)
        tape.record(out, pull)
        return out
    return Tensor(out_data)


def _check_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeMismatchError(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "add")

    def pull(g):
        _accum(a, g)
        _accum(b, g)

    return _finish(a.data + b.data, (a, b), pull)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "sub")

    def pull(g):
        _accum(a, g)
        _accum(b, -g)

    return _finish(a.data - b.data, (a, b), pull)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "mul")
    ad, bd = a.data, b.data

    def pull(g):
        _accum(a, g * bd)
        _accum(b, g * ad)

    return _finish(ad * bd, (a, b), pull)


def div(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "div")
    ad, bd = a.data, b.data

    def pull(g):
        _accum(a, g / bd)
        _accum(b, -g * ad / (bd * bd))

    return _finish(ad / bd, (a, b), pull)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeMismatchError(f"matmul: inner dims {a.data.shape} @ {b.data.shape}")
    ad, bd = a.data, b.data

    def pull(g):
        _accum(a, g @ bd.T)
        _accum(b, ad.T @ g)

    return _finish(ad @ bd, (a, b), pull)


def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    """Row-broadcast add: (n, f) + (1, f)."""
    if bias.data.shape != (1, x.data.shape[1]):
        raise ShapeMismatchError(f"add_bias: bias {bias.data.shape} for input {x.data.shape}")

    def pull(g):
        _accum(x, g)
        _accum(bias, g.sum(axis=0, keepdims=True))

    return _finish(x.data + bias.data, (x, bias), pull)


def combine(tensors: Sequence[Tensor], scalars: Sequence) -> Tensor:
    """Fused linear combination  sum_i scalars[i] * tensors[i].

    Scalars may be Python numbers or (1, 1) tensors; the forward pass always
    runs on their float values, so a constant coefficient and a learnable one
    holding the same value produce bitwise-identical outputs.  One output
    buffer is allocated regardless of the number of terms.
    """
    if len(tensors) != len(scalars) or not tensors:
        raise ShapeMismatchError("combine: need equally many tensors and scalars, at least one")
    shape = tensors[0].data.shape
    for t in tensors[1:]:
        if t.data.shape != shape:
            raise ShapeMismatchError(f"combine: mixed shapes {shape} and {t.data.shape}")
    svals = []
    for s in scalars:
        if isinstance(s, Tensor):
            if s.data.shape != (1, 1):
                raise ShapeMismatchError("combine: tensor coefficients must be (1, 1)")
            svals.append(float(s.data[0, 0]))
        else:
            svals.append(float(s))

    out_data = svals[0] * tensors[0].data
    for s, t in zip(svals[1:], tensors[1:]):
        if s != 0.0:
            out_data += s * t.data

    inputs = list(tensors) + [s for s in scalars if isinstance(s, Tensor)]
    datas = [t.data for t in tensors]

    def pull(g):
        for s_val, s, t, td in zip(svals, scalars, tensors, datas):
            if t.requires_grad:
                _accum(t, s_val * g)
            if isinstance(s, Tensor) and s.requires_grad:
                _accum(s, np.array([[float(np.sum(g * td))]]))

    return _finish(out_data, inputs, pull)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def pull(g):
        _accum(x, g * mask)

    return _finish(np.maximum(x.data, 0.0), (x,), pull)


def clamp_min(x: Tensor, bound: float) -> Tensor:
    """max(x, bound), with pass-through gradient wherever x >= bound."""
    mask = x.data >= bound

    def pull(g):
        _accum(x, g * mask)

    return _finish(np.maximum(x.data, bound), (x,), pull)


def dropout(x: Tensor, p: float, training: bool, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p).

    Identity when training is False or p == 0 (no random numbers drawn, so
    evaluation passes never perturb the rng stream).
    """
    if not (0.0 <= p < 1.0):
        raise InvalidProbabilityError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    mask = (rng.random(x.data.shape) >= p) * (1.0 / (1.0 - p))

    def pull(g):
        _accum(x, g * mask)

    return _finish(x.data * mask, (x,), pull)


def layer_norm(x: Tensor) -> Tensor:
    """Per-row standardization: (x - mean) / sqrt(var + 1e-5), no affine part.

    Variance is the population variance of the row.  The backward pass only
    needs the output and the inverse std, so the caller may drop the input's
    data buffer after the forward step.
    """
    xd = x.data
    mu = xd.mean(axis=1, keepdims=True)
    centered = xd - mu
    var = np.mean(centered * centered, axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LAYER_NORM_EPS)
    out_data = centered * inv_std
    y = out_data

    def pull(g):
        # dx = r * (g - mean(g) - y * mean(g*y)), all means per row
        gm = g.mean(axis=1, keepdims=True)
        gym = np.mean(g * y, axis=1, keepdims=True)
        _accum(x, inv_std * (g - gm - y * gym))

    return _finish(out_data, (x,), pull)


def sum_all(x: Tensor) -> Tensor:
    """Sum of all entries as a (1, 1) tensor."""
    shape = x.data.shape

    def pull(g):
        _accum(x, np.full(shape, float(g[0, 0])))

    return _finish(np.array([[float(x.data.sum())]]), (x,), pull)


def masked_softmax_cross_entropy(logits: Tensor, labels, mask) -> Tensor:
    """Mean softmax cross-entropy over the rows selected by `mask`.

    labels: int array of shape (n,); only the masked entries are read.
    mask: array of unique row indices into logits.  Shift-invariant
    (row max is subtracted before exponentiation).
    """
    idx = np.asarray(mask, dtype=np.int64).ravel()
    if idx.size == 0:
        raise EmptyMaskError("cross-entropy mask selects no rows")
    lab_all = np.asarray(labels, dtype=np.int64).ravel()
    if lab_all.shape[0] != logits.data.shape[0]:
        raise ShapeMismatchError(
            f"labels length {lab_all.shape[0]} != {logits.data.shape[0]} rows"
        )
    n, num_classes = logits.data.shape
    if idx.min() < 0 or idx.max() >= n:
        raise IndexOutOfRangeError(f"mask indices must lie in [0, {n})")
    lab = lab_all[idx]
    if lab.min() < 0 or lab.max() >= num_classes:
        bad = idx[(lab < 0) | (lab >= num_classes)][0]
        raise LabelOutOfRangeError(f"label of node {bad} outside [0, {num_classes})")

    m = idx.size
    lm = logits.data[idx]
    z = lm - lm.max(axis=1, keepdims=True)
    ez = np.exp(z)
    sez = ez.sum(axis=1, keepdims=True)
    rows = np.arange(m)
    nll = np.log(sez[:, 0]) - z[rows, lab]
    loss = np.array([[nll.mean()]])

    def pull(g):
        soft = ez / sez
        soft[rows, lab] -= 1.0
        full = np.zeros((n, num_classes))
        full[idx] = soft * (float(g[0, 0]) / m)
        _accum(logits, full)

    return _finish(loss, (logits,), pull)


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None


class AdamState:
    """Adam moment buffers for a fixed parameter group.

    weight_decay is classic L2: decay * value is added to the gradient
    before the moment updates.  Keep parameters that must not decay
    (biases, basis parameters) in a separate group with decay 0.
    """

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 0.01,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = ADAM_EPS,
        weight_decay: float = 0.0,
    ):
        self.params = list(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]


def adam_step(state: AdamState, params: Sequence[Tensor] | None = None,
              grads: Sequence[np.ndarray | None] | None = None) -> None:
    """One Adam update with bias correction; params with a None grad are skipped.

    Parameter data buffers are replaced, never written in place, so tensors
    captured by an earlier forward pass keep the values they were used with.
    """
    plist = state.params if params is None else list(params)
    if len(plist) != len(state.m):
        raise ShapeMismatchError(f"adam_step: {len(plist)} params for {len(state.m)} moment buffers")
    glist = [p.grad for p in plist] if grads is None else list(grads)
    if len(glist) != len(plist):
        raise ShapeMismatchError("adam_step: params and grads differ in length")

    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    for i, (p, g) in enumerate(zip(plist, glist)):
        if g is None:
            continue
        if g.shape != p.data.shape or state.m[i].shape != p.data.shape:
            raise ShapeMismatchError(f"adam_step: grad shape {g.shape} vs param {p.data.shape}")
        if state.weight_decay != 0.0:
            g = g + state.weight_decay * p.data
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * (g * g)
        m_hat = state.m[i] / bc1
        v_hat = state.v[i] / bc2
        p.data = p.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def numerical_gradient(f: Callable[[], float], t: Tensor, h: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of f() with respect to t, entry by entry.

    f must re-evaluate the objective from t.data on every call.  t is
    restored exactly afterwards.
    """
    flat = t.data.ravel()
    out = np.zeros_like(t.data)
    oflat = out.ravel()
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + h
        f_plus = f()
        flat[i] = saved - h
        f_minus = f()
        flat[i] = saved
        oflat[i] = (f_plus - f_minus) / (2.0 * h)
    return out
