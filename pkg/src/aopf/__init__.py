"""Stabilized adaptive orthogonal-polynomial graph filters.

Spectral node-classification filters built on the shifted Laplacian
L_hat = L_sym - I, whose Jacobi-family basis shape is either fixed at the
Chebyshev point (static), constrained to one learnable parameter
(gegenbauer), or fully learnable (jacobi).  Includes a small reverse-mode
autodiff engine, deterministic training with early stopping, 10-fold
cross-validation, K-ablation sweeps, and a CLI.
"""

from ._version import __version__
from .data import (
    Dataset,
    FoldPlan,
    Split,
    ValidationReport,
    load_dataset,
    make_folds,
    save_dataset,
    validate_dataset,
)
from .diffcore import AdamState, Tape, Tensor, adam_step
from .errors import AopfError
from .graphcore import ShiftedLaplacian, SparseGraph, from_edge_list, shifted_laplacian, spmm
from .model import (
    AopfNetwork,
    FilterLayer,
    ParamReport,
    filter_layer_forward,
    init_network,
    network_forward,
    report_params,
)
from .polybasis import (
    BasisMode,
    BasisParams,
    RecurrenceCoeffs,
    ResolvedParams,
    jacobi_scalar,
    propagate_basis,
    recurrence_coeffs,
    resolve_params,
)
from .trainer import (
    AblationTable,
    CvResult,
    GradCheckResult,
    RunResult,
    TrainConfig,
    cross_validate,
    k_ablation,
    run_gradient_check,
    train_run,
)

__all__ = [
    "__version__",
    "AopfError",
    "Tensor",
    "Tape",
    "AdamState",
    "adam_step",
    "SparseGraph",
    "ShiftedLaplacian",
    "from_edge_list",
    "shifted_laplacian",
    "spmm",
    "BasisMode",
    "BasisParams",
    "ResolvedParams",
    "RecurrenceCoeffs",
    "resolve_params",
    "recurrence_coeffs",
    "jacobi_scalar",
    "propagate_basis",
    "FilterLayer",
    "AopfNetwork",
    "ParamReport",
    "init_network",
    "filter_layer_forward",
    "network_forward",
    "report_params",
    "Dataset",
    "Split",
    "FoldPlan",
    "ValidationReport",
    "load_dataset",
    "save_dataset",
    "validate_dataset",
    "make_folds",
    "TrainConfig",
    "RunResult",
    "CvResult",
    "AblationTable",
    "GradCheckResult",
    "train_run",
    "cross_validate",
    "k_ablation",
    "run_gradient_check",
]
