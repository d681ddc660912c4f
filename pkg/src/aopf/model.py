"""The two-layer polynomial filter network with per-order weight matrices.

Each layer propagates its input through the basis recurrence and combines
the K+1 blocks as sum_k Z_k W_k + bias, ChebyNet style.  The basis
parameters are shared by both layers, so one (alpha, beta) pair describes
the whole model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffcore import Tensor, add, add_bias, dropout, matmul, relu, scalar
from .errors import ConfigError, ShapeMismatchError
from .graphcore import ShiftedLaplacian
from .polybasis import (
    CHEBYSHEV_ALPHA,
    BasisMode,
    BasisParams,
    propagate_basis,
    resolve_params,
)


@dataclass
class FilterLayer:
    """K+1 per-order weight matrices [f_in x f_out] and one bias row."""

    weights: list[Tensor]
    bias: Tensor

    @property
    def K(self) -> int:
        return len(self.weights) - 1


@dataclass
class AopfNetwork:
    layer1: FilterLayer
    layer2: FilterLayer
    basis: BasisParams
    hidden: int
    dropout_p: float
    stabilize: bool = True


@dataclass(frozen=True)
class ParamReport:
    """Effective basis parameters of a (trained) network."""

    mode: BasisMode
    effective_alpha: float
    effective_beta: float
    clamped: bool

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "effective_alpha": self.effective_alpha,
            "effective_beta": self.effective_beta,
            "clamped": self.clamped,
        }


def glorot_uniform(f_in: int, f_out: int, rng: np.random.Generator) -> np.ndarray:
    r = math.sqrt(6.0 / (f_in + f_out))
    return rng.uniform(-r, r, size=(f_in, f_out))


def init_filter_layer(k_order: int, f_in: int, f_out: int, rng: np.random.Generator) -> FilterLayer:
    """Glorot-uniform weights for each order, zero bias; draw order is fixed."""
    weights = [
        Tensor(glorot_uniform(f_in, f_out, rng), requires_grad=True)
        for _ in range(k_order + 1)
    ]
    bias = Tensor(np.zeros((1, f_out)), requires_grad=True)
    return FilterLayer(weights=weights, bias=bias)


def make_basis_params(mode: BasisMode) -> BasisParams:
    """Raw parameters at the Chebyshev point: every mode starts identical."""
    if mode is BasisMode.STATIC:
        return BasisParams(mode=mode)
    if mode is BasisMode.GEGENBAUER:
        return BasisParams(mode=mode, lam_raw=scalar(0.0, requires_grad=True))
    if mode is BasisMode.FULL_JACOBI:
        return BasisParams(
            mode=mode,
            alpha_raw=scalar(CHEBYSHEV_ALPHA, requires_grad=True),
            beta_raw=scalar(CHEBYSHEV_ALPHA, requires_grad=True),
        )
    raise ConfigError(f"unhandled basis mode {mode!r}")


def init_network(
    num_features: int,
    num_classes: int,
    mode: BasisMode,
    k_order: int = 3,
    hidden: int = 16,
    dropout_p: float = 0.5,
    stabilize: bool = True,
    rng: np.random.Generator | None = None,
) -> AopfNetwork:
    """A fresh 2-layer network; weight draws do not depend on the mode."""
    if hidden < 1:
        raise ConfigError(f"hidden width must be >= 1, got {hidden}")
    rng = rng if rng is not None else np.random.default_rng(0)
    layer1 = init_filter_layer(k_order, num_features, hidden, rng)
    layer2 = init_filter_layer(k_order, hidden, num_classes, rng)
    return AopfNetwork(
        layer1=layer1,
        layer2=layer2,
        basis=make_basis_params(mode),
        hidden=hidden,
        dropout_p=dropout_p,
        stabilize=stabilize,
    )


def filter_layer_forward(
    layer: FilterLayer,
    lhat: ShiftedLaplacian,
    x: Tensor,
    basis: BasisParams,
    stabilize: bool,
    blocks: list[Tensor] | None = None,
) -> Tensor:
    """sum_k Z_k W_k + bias.  Precomputed blocks may be passed in when the
    basis is constant and x is the same tensor they were derived from."""
    if blocks is None:
        blocks = propagate_basis(lhat, x, layer.K, basis, stabilize)
    elif len(blocks) != layer.K + 1:
        raise ShapeMismatchError(f"{len(blocks)} blocks for K={layer.K}")
    acc = matmul(blocks[0], layer.weights[0])
    for k in range(1, layer.K + 1):
        acc = add(acc, matmul(blocks[k], layer.weights[k]))
    return add_bias(acc, layer.bias)


def network_forward(
    net: AopfNetwork,
    lhat: ShiftedLaplacian,
    features: Tensor,
    training: bool,
    rng: np.random.Generator,
    layer1_blocks: list[Tensor] | None = None,
) -> Tensor:
    """Logits [n x C]; dropout is active only when training."""
    h = filter_layer_forward(
        net.layer1, lhat, features, net.basis, net.stabilize, blocks=layer1_blocks
    )
    h = dropout(h, net.dropout_p, training, rng)
    h = relu(h)
    return filter_layer_forward(net.layer2, lhat, h, net.basis, net.stabilize)


def parameters(net: AopfNetwork) -> list[Tensor]:
    """All learnables in a stable order: weights, biases, then basis raws."""
    return weight_parameters(net) + bias_parameters(net) + net.basis.learnables()


def weight_parameters(net: AopfNetwork) -> list[Tensor]:
    """The weight matrices — the group that receives weight decay."""
    return list(net.layer1.weights) + list(net.layer2.weights)


def bias_parameters(net: AopfNetwork) -> list[Tensor]:
    return [net.layer1.bias, net.layer2.bias]


def report_params(net: AopfNetwork) -> ParamReport:
    resolved = resolve_params(net.basis)
    alpha = resolved.alpha.item() if isinstance(resolved.alpha, Tensor) else resolved.alpha
    beta = resolved.beta.item() if isinstance(resolved.beta, Tensor) else resolved.beta
    return ParamReport(
        mode=net.basis.mode,
        effective_alpha=float(alpha),
        effective_beta=float(beta),
        clamped=resolved.clamped,
    )
