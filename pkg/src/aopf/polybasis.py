"""Jacobi-family polynomial recurrences and stabilized block propagation.

Three basis modes over the shared shifted Laplacian:

  static      alpha = beta = -0.5 fixed (the Chebyshev point)
  gegenbauer  alpha = beta = lam_raw - 0.5, one learnable scalar
  jacobi      alpha, beta learned independently

The three-term recurrence in the standard normalization, with
s = 2k + alpha + beta and denom = 2k(k + alpha + beta)(s - 2):

  P_0 = 1
  P_1 = (alpha + 1) + (alpha + beta + 2)(x - 1)/2
  P_k = (a_k x + b_k) P_{k-1} + c_k P_{k-2},  k >= 2
    a_k = (s-1) s (s-2) / denom
    b_k = (s-1)(alpha^2 - beta^2) / denom
    c_k = -2 (k+alpha-1)(k+beta-1) s / denom

P_1 is handled by its closed form, so the k=1 degenerate denominator at
alpha + beta = -1 never arises; for k >= 2 and alpha, beta > -1 the
denominator is strictly positive.

Coefficient helpers are written once and evaluated either on floats or
on (1, 1) tensors, so the learnable modes run the exact same arithmetic
as the static one and start bitwise-identical to it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .diffcore import Tensor, _active_tape, clamp_min, combine, layer_norm
from .errors import ConfigError, DomainError, ShapeMismatchError
from .graphcore import ShiftedLaplacian, spmm

EPS_DOMAIN = 0.01
CHEBYSHEV_ALPHA = -0.5


class BasisMode(Enum):
    STATIC = "static"
    GEGENBAUER = "gegenbauer"
    FULL_JACOBI = "jacobi"

    @classmethod
    def from_string(cls, s: str) -> "BasisMode":
        for mode in cls:
            if mode.value == s:
                return mode
        valid = ", ".join(m.value for m in cls)
        raise ConfigError(f"unknown basis mode {s!r}; expected one of: {valid}")


@dataclass
class BasisParams:
    """Raw basis parameters for one network; the learnable ones are tensors.

    Raw fields may be Python floats (fixed) or (1, 1) Tensors (learnable).
    Only the fields of the active mode are consulted.
    """

    mode: BasisMode
    lam_raw: float | Tensor | None = None
    alpha_raw: float | Tensor | None = None
    beta_raw: float | Tensor | None = None
    eps_domain: float = EPS_DOMAIN

    def learnables(self) -> list[Tensor]:
        """The tensor-valued raw parameters, in a stable order."""
        if self.mode is BasisMode.GEGENBAUER:
            candidates = [self.lam_raw]
        elif self.mode is BasisMode.FULL_JACOBI:
            candidates = [self.alpha_raw, self.beta_raw]
        else:
            candidates = []
        return [p for p in candidates if isinstance(p, Tensor) and p.requires_grad]


@dataclass(frozen=True)
class ResolvedParams:
    """Effective (alpha, beta) after mode resolution and domain clamping."""

    alpha: float | Tensor
    beta: float | Tensor
    clamped: bool


def _value(x: float | Tensor) -> float:
    return x.item() if isinstance(x, Tensor) else float(x)


def _clamped_to(x: float | Tensor, bound: float) -> float | Tensor:
    if isinstance(x, Tensor):
        return clamp_min(x, bound)
    return max(float(x), bound)


def resolve_params(p: BasisParams) -> ResolvedParams:
    """Map raw parameters to effective (alpha, beta), clamped to > -1.

    static     -> (-0.5, -0.5), never clamped
    gegenbauer -> alpha = beta = lam_raw - 0.5 (one shared value)
    jacobi     -> (alpha_raw, beta_raw)

    Each coordinate is clamped to >= -1 + eps_domain; the gradient passes
    through wherever the raw value is inside the domain and is zero where
    the clamp is active.  `clamped` reports whether any clamp engaged.
    """
    bound = -1.0 + p.eps_domain
    if p.mode is BasisMode.STATIC:
        return ResolvedParams(CHEBYSHEV_ALPHA, CHEBYSHEV_ALPHA, False)
    if p.mode is BasisMode.GEGENBAUER:
        if p.lam_raw is None:
            raise ConfigError("gegenbauer mode needs lam_raw")
        alpha = p.lam_raw - 0.5
        clamped = _value(alpha) < bound
        eff = _clamped_to(alpha, bound)
        return ResolvedParams(eff, eff, clamped)
    if p.mode is BasisMode.FULL_JACOBI:
        if p.alpha_raw is None or p.beta_raw is None:
            raise ConfigError("jacobi mode needs alpha_raw and beta_raw")
        clamped = _value(p.alpha_raw) < bound or _value(p.beta_raw) < bound
        return ResolvedParams(
            _clamped_to(p.alpha_raw, bound), _clamped_to(p.beta_raw, bound), clamped
        )
    raise ConfigError(f"unhandled basis mode {p.mode!r}")


@dataclass(frozen=True)
class RecurrenceCoeffs:
    """Coefficients of P_k = (a_k x + b_k) P_{k-1} + c_k P_{k-2}."""

    a_k: float
    b_k: float
    c_k: float


def _check_domain(alpha: float, beta: float) -> None:
    if not (alpha > -1.0 and beta > -1.0):
        raise DomainError(f"need alpha, beta > -1, got ({alpha}, {beta})")


def _coeff_terms(k: int, alpha, beta):
    """The (a_k, b_k, c_k) expressions; alpha/beta are floats or (1, 1) tensors.

    Written as one shared expression so both evaluation paths perform the
    identical sequence of IEEE operations.
    """
    s = 2.0 * k + alpha + beta
    denom = 2.0 * k * (k + alpha + beta) * (s - 2.0)
    a = (s - 1.0) * s * (s - 2.0) / denom
    b = (s - 1.0) * (alpha * alpha - beta * beta) / denom
    c = -2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * s / denom
    return a, b, c


def _z1_terms(alpha, beta):
    """Coefficients (on Z_0 and on L_hat Z_0) of the closed-form degree-1 step.

    P_1 = (alpha+1) + (alpha+beta+2)(x-1)/2 applied to an operator gives
    (alpha + 1 - s2) * Z_0 + s2 * (L_hat Z_0) with s2 = (alpha+beta+2)/2.
    """
    s2 = (alpha + beta + 2.0) / 2.0
    c0 = (alpha + 1.0) - s2
    return c0, s2


def recurrence_coeffs(k: int, alpha: float, beta: float) -> RecurrenceCoeffs:
    """Scalar recurrence coefficients for degree k >= 2."""
    if k < 2:
        raise DomainError(f"recurrence coefficients are defined for k >= 2, got {k}")
    _check_domain(alpha, beta)
    a, b, c = _coeff_terms(k, float(alpha), float(beta))
    return RecurrenceCoeffs(a_k=a, b_k=b, c_k=c)


def jacobi_scalar(k: int, alpha: float, beta: float, x: float) -> float:
    """P_k^{(alpha,beta)}(x) by the three-term recurrence (scalar oracle)."""
    if k < 0:
        raise DomainError(f"degree must be >= 0, got {k}")
    _check_domain(alpha, beta)
    alpha, beta, x = float(alpha), float(beta), float(x)
    if k == 0:
        return 1.0
    p_prev = 1.0
    p = (alpha + 1.0) + (alpha + beta + 2.0) * (x - 1.0) / 2.0
    for j in range(2, k + 1):
        a, b, c = _coeff_terms(j, alpha, beta)
        p, p_prev = (a * x + b) * p + c * p_prev, p
    return p


def propagate_basis(
    lhat: ShiftedLaplacian,
    x: Tensor,
    K: int,
    params: BasisParams,
    stabilize: bool = True,
) -> list[Tensor]:
    """Blocks [Z_0, ..., Z_K] of the (optionally stabilized) recurrence.

    Z_0 = norm(x); Z_1 = norm(c0 Z_0 + s2 L_hat Z_0); for k >= 2
    Z_k = norm(a_k L_hat Z_{k-1} + b_k Z_{k-1} + c_k Z_{k-2}).  norm is
    per-node LayerNorm when stabilize else identity, so with
    stabilize=False the blocks are exactly P_k(L_hat) x.  Differentiable
    w.r.t. x and the raw basis parameters.

    Only n x f feature blocks are materialized, never matrix polynomials;
    under an active tape the pre-norm temporaries release their forward
    buffers once normalized, keeping K=10 runs inside a small footprint.
    """
    if K < 0:
        raise DomainError(f"degree K must be >= 0, got {K}")
    if x.data.shape[0] != lhat.num_nodes:
        raise ShapeMismatchError(
            f"features have {x.data.shape[0]} rows for {lhat.num_nodes} nodes"
        )
    resolved = resolve_params(params)
    alpha, beta = resolved.alpha, resolved.beta
    _check_domain(_value(alpha), _value(beta))

    def norm(pre: Tensor, release: bool) -> Tensor:
        if not stabilize:
            return pre
        out = layer_norm(pre)
        if release and _active_tape() is not None:
            pre._drop_data()
        return out

    blocks = [norm(x, release=False)]
    if K == 0:
        return blocks

    c0, s2 = _z1_terms(alpha, beta)
    t1 = spmm(lhat, blocks[0])
    blocks.append(norm(combine([blocks[0], t1], [c0, s2]), release=True))

    for k in range(2, K + 1):
        a, b, c = _coeff_terms(k, alpha, beta)
        t = spmm(lhat, blocks[k - 1])
        blocks.append(norm(combine([t, blocks[k - 1], blocks[k - 2]], [a, b, c]), release=True))
    return blocks
