"""Deterministic training runs, 10-fold cross-validation, K-ablation sweeps,
and the finite-difference gradient check.

Every run is a pure function of (config, dataset, split): RNGs are local
and seeded, tapes are per-run, and optimizer updates replace buffers
instead of mutating them, which makes best-epoch snapshots free and reruns
bitwise identical.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ._version import __version__
from .data import Dataset, FoldPlan, Split, make_folds
from .diffcore import (
    AdamState,
    Tape,
    Tensor,
    adam_step,
    masked_softmax_cross_entropy,
    numerical_gradient,
    zero_grads,
)
from .errors import ConfigError, ValidationError
from .graphcore import ShiftedLaplacian, from_edge_list, shifted_laplacian
from .model import (
    AopfNetwork,
    ParamReport,
    bias_parameters,
    init_network,
    network_forward,
    parameters,
    report_params,
    weight_parameters,
)
from .polybasis import BasisMode, propagate_basis
from .synthetic import random_instance, random_split

GRADCHECK_H = 1e-4
GRADCHECK_TOLERANCE = 1e-4
# relative-error denominator floor: entries where both gradients are tiny
# are effectively compared with absolute tolerance floor * tolerance
GRADCHECK_DENOM_FLOOR = 1e-2
GRADCHECK_SAMPLE = 48


@dataclass
class TrainConfig:
    mode: BasisMode = BasisMode.STATIC
    K: int = 3
    hidden: int = 16
    lr: float = 0.01
    weight_decay: float = 5e-4
    dropout_p: float = 0.5
    max_epochs: int = 200
    patience: int = 50
    seed: int = 0
    stabilize: bool = True
    add_self_loops: bool = True
    row_normalize: bool = True

    def validate(self) -> None:
        if not isinstance(self.mode, BasisMode):
            raise ConfigError(f"mode must be a BasisMode, got {self.mode!r}")
        if self.K < 0:
            raise ConfigError(f"K must be >= 0, got {self.K}")
        if self.hidden < 1:
            raise ConfigError(f"hidden must be >= 1, got {self.hidden}")
        if not (0.0 <= self.dropout_p < 1.0):
            raise ConfigError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.lr < 0 or self.weight_decay < 0:
            raise ConfigError("lr and weight_decay must be nonnegative")
        if self.max_epochs < 0:
            raise ConfigError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if not (1 <= self.patience <= self.max_epochs or self.max_epochs == 0):
            raise ConfigError(
                f"patience must be in [1, max_epochs], got {self.patience}/{self.max_epochs}"
            )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        return d


@dataclass
class RunResult:
    """One training run: metrics at the best-validation epoch plus curves.

    test_acc_at_best is measured on the parameter snapshot of the epoch
    with the highest validation accuracy (ties resolved toward lower
    validation loss, then the earliest epoch), never the final epoch.
    """

    config: dict
    seed: int
    best_epoch: int
    val_acc_best: float
    test_acc_at_best: float
    param_report: ParamReport
    curve: list[tuple[float, float]]  # per epoch: (train_loss, val_acc)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "best_epoch": self.best_epoch,
            "val_acc_best": self.val_acc_best,
            "test_acc_at_best": self.test_acc_at_best,
            "param_report": self.param_report.to_dict(),
            "curve": [[tl, va] for tl, va in self.curve],
        }


@dataclass
class CvResult:
    config: dict
    runs: list[RunResult]
    mean_test_acc: float
    std_test_acc: float
    mean_effective_alpha: float
    mean_effective_beta: float

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "mean_test_acc": self.mean_test_acc,
            "std_test_acc": self.std_test_acc,
            "mean_effective_alpha": self.mean_effective_alpha,
            "mean_effective_beta": self.mean_effective_beta,
            "folds": [r.to_dict() for r in self.runs],
        }


@dataclass(frozen=True)
class AblationRow:
    mode: BasisMode
    K: int
    mean_test_acc: float
    std_test_acc: float


@dataclass
class AblationTable:
    config: dict
    protocol: str
    rows: list[AblationRow]
    runs: list[tuple[BasisMode, int, list[RunResult]]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "protocol": self.protocol,
            "rows": [
                {
                    "mode": r.mode.value,
                    "K": r.K,
                    "mean_test_acc": r.mean_test_acc,
                    "std_test_acc": r.std_test_acc,
                }
                for r in self.rows
            ],
        }


def _check_split(split: Split, ds: Dataset) -> None:
    n = ds.num_nodes
    arrays = {"train": split.train, "val": split.val, "test": split.test}
    taken: set[int] = set()
    for part, arr in arrays.items():
        if len(arr) == 0:
            raise ValidationError(f"{part} split is empty")
        for idx in arr:
            if not (0 <= idx < n):
                raise ValidationError(f"{part} split index {idx} outside [0, {n})")
            if int(idx) in taken:
                raise ValidationError(f"node {idx} appears in more than one split part")
            taken.add(int(idx))


def fixed_split(ds: Dataset) -> Split:
    if ds.fixed_splits is None:
        raise ConfigError(f"dataset {ds.name!r} carries no fixed splits")
    return Split(
        train=ds.fixed_splits["train"],
        val=ds.fixed_splits["val"],
        test=ds.fixed_splits["test"],
    )


def _row_normalized(x: np.ndarray) -> np.ndarray:
    s = x.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(s != 0, 1.0 / s, 0.0)
    return x * inv


def _accuracy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    preds = logits[mask].argmax(axis=1)
    return float(np.mean(preds == labels[mask]))


def build_laplacian(ds: Dataset, add_self_loops: bool) -> ShiftedLaplacian:
    graph = from_edge_list(ds.edges, ds.num_nodes, symmetrize=True)
    return shifted_laplacian(graph, add_self_loops=add_self_loops)


def train_run(cfg: TrainConfig, ds: Dataset, split: Split) -> RunResult:
    """Train once with Adam and early stopping; evaluate the best snapshot.

    Epoch e in the curve is the state after e optimizer steps (epoch 0 is
    the initialization); curve losses and accuracies come from evaluation
    passes with dropout off.
    """
    cfg.validate()
    _check_split(split, ds)
    rng = np.random.default_rng(cfg.seed)
    lhat = build_laplacian(ds, cfg.add_self_loops)
    feats = ds.features
    if cfg.row_normalize:
        feats = _row_normalized(feats)
    x = Tensor(feats)
    net = init_network(
        num_features=ds.num_features,
        num_classes=ds.num_classes,
        mode=cfg.mode,
        k_order=cfg.K,
        hidden=cfg.hidden,
        dropout_p=cfg.dropout_p,
        stabilize=cfg.stabilize,
        rng=rng,
    )

    # with a constant basis the layer-1 blocks never change: build once, untaped
    layer1_blocks = None
    if not net.basis.learnables():
        layer1_blocks = propagate_basis(lhat, x, cfg.K, net.basis, cfg.stabilize)

    decay_group = AdamState(
        weight_parameters(net), lr=cfg.lr, weight_decay=cfg.weight_decay
    )
    plain_group = AdamState(bias_parameters(net) + net.basis.learnables(), lr=cfg.lr)
    params = parameters(net)
    labels = ds.labels

    def train_step() -> None:
        with Tape() as tape:
            logits = network_forward(
                net, lhat, x, training=True, rng=rng, layer1_blocks=layer1_blocks
            )
            loss = masked_softmax_cross_entropy(logits, labels, split.train)
            zero_grads(params)
            tape.backward(loss)
        adam_step(decay_group)
        adam_step(plain_group)

    def evaluate() -> tuple[float, float, float]:
        logits = network_forward(
            net, lhat, x, training=False, rng=rng, layer1_blocks=layer1_blocks
        )
        train_loss = masked_softmax_cross_entropy(logits, labels, split.train).item()
        val_loss = masked_softmax_cross_entropy(logits, labels, split.val).item()
        val_acc = _accuracy(logits.data, labels, split.val)
        return train_loss, val_acc, val_loss

    def snapshot() -> list[np.ndarray]:
        # adam_step replaces buffers, so holding references is a free copy
        return [p.data for p in params]

    curve: list[tuple[float, float]] = []
    train_loss, val_acc, val_loss = evaluate()
    curve.append((train_loss, val_acc))
    best_epoch, best_acc, best_loss, best_params = 0, val_acc, val_loss, snapshot()

    for epoch in range(1, cfg.max_epochs + 1):
        train_step()
        train_loss, val_acc, val_loss = evaluate()
        curve.append((train_loss, val_acc))
        if val_acc > best_acc or (val_acc == best_acc and val_loss < best_loss):
            best_epoch, best_acc, best_loss, best_params = epoch, val_acc, val_loss, snapshot()
        if epoch - best_epoch >= cfg.patience:
            break

    for p, data in zip(params, best_params):
        p.data = data
    final_logits = network_forward(
        net, lhat, x, training=False, rng=rng, layer1_blocks=layer1_blocks
    )
    test_acc = _accuracy(final_logits.data, labels, split.test)

    config_echo = {"dataset": ds.name, **cfg.to_dict()}
    return RunResult(
        config=config_echo,
        seed=cfg.seed,
        best_epoch=best_epoch,
        val_acc_best=best_acc,
        test_acc_at_best=test_acc,
        param_report=report_params(net),
        curve=curve,
    )


def _parallel_map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def cross_validate(cfg: TrainConfig, ds: Dataset, plan: FoldPlan, jobs: int = 1) -> CvResult:
    """One train_run per fold, seeded cfg.seed + fold index, then aggregate."""

    def one(item: tuple[int, Split]) -> RunResult:
        i, fold = item
        return train_run(replace(cfg, seed=cfg.seed + i), ds, fold)

    runs = _parallel_map(one, list(enumerate(plan.folds)), jobs)
    accs = [r.test_acc_at_best for r in runs]
    alphas = [r.param_report.effective_alpha for r in runs]
    betas = [r.param_report.effective_beta for r in runs]
    return CvResult(
        config={"dataset": ds.name, **cfg.to_dict()},
        runs=runs,
        mean_test_acc=float(np.mean(accs)),
        std_test_acc=float(np.std(accs)),
        mean_effective_alpha=float(np.mean(alphas)),
        mean_effective_beta=float(np.mean(betas)),
    )


def k_ablation(
    cfg: TrainConfig,
    ds: Dataset,
    k_list: list[int],
    protocol: str = "fixed",
    modes: list[BasisMode] | None = None,
    jobs: int = 1,
) -> AblationTable:
    """One run (fixed protocol) or one 10-fold CV (cv protocol) per (mode, K)."""
    if not k_list:
        raise ConfigError("K list must not be empty")
    if protocol not in ("fixed", "cv"):
        raise ConfigError(f"protocol must be 'fixed' or 'cv', got {protocol!r}")
    modes = modes if modes is not None else [cfg.mode]
    if protocol == "fixed":
        split = fixed_split(ds)
        plan = None
    else:
        split = None
        plan = make_folds(ds, cfg.seed)

    rows: list[AblationRow] = []
    cell_runs: list[tuple[BasisMode, int, list[RunResult]]] = []
    for mode in modes:
        for k in k_list:
            cell_cfg = replace(cfg, mode=mode, K=k)
            if protocol == "fixed":
                run = train_run(cell_cfg, ds, split)
                mean, std, runs = run.test_acc_at_best, 0.0, [run]
            else:
                cv = cross_validate(cell_cfg, ds, plan, jobs=jobs)
                mean, std, runs = cv.mean_test_acc, cv.std_test_acc, cv.runs
            rows.append(AblationRow(mode=mode, K=k, mean_test_acc=mean, std_test_acc=std))
            cell_runs.append((mode, k, runs))
    return AblationTable(
        config={"dataset": ds.name, **cfg.to_dict()},
        protocol=protocol,
        rows=rows,
        runs=cell_runs,
    )


# ---------------------------------------------------------------------------
# gradient check


@dataclass(frozen=True)
class GradCheckCase:
    mode: BasisMode
    stabilize: bool
    tensor: str
    rel_err: float


@dataclass
class GradCheckResult:
    max_rel_err: float
    tolerance: float
    cases: list[GradCheckCase]
    elapsed_s: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "max_rel_err": self.max_rel_err,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "elapsed_s": self.elapsed_s,
            "cases": [
                {
                    "mode": c.mode.value,
                    "stabilize": c.stabilize,
                    "tensor": c.tensor,
                    "rel_err": c.rel_err,
                }
                for c in self.cases
            ],
        }


def _fd_entries(f, t: Tensor, indices: np.ndarray, h: float) -> np.ndarray:
    flat = t.data.ravel()
    out = np.zeros(indices.shape[0])
    for j, i in enumerate(indices):
        saved = flat[i]
        flat[i] = saved + h
        f_plus = f()
        flat[i] = saved - h
        f_minus = f()
        flat[i] = saved
        out[j] = (f_plus - f_minus) / (2.0 * h)
    return out


def run_gradient_check(seed: int = 0) -> GradCheckResult:
    """Analytic vs central-difference gradients for every learnable tensor.

    All three basis modes, stabilize on and off, K=3, on a seeded 20-node
    instance.  Dropout stays off so the objective is smooth.  Tensors with
    more entries than GRADCHECK_SAMPLE are checked on a seeded entry
    sample; small tensors (biases, basis scalars) are checked exhaustively.
    """
    started = time.monotonic()
    ds = random_instance(num_nodes=20, num_features=8, num_classes=3, edge_prob=0.3, seed=seed)
    split = random_split(ds, seed=seed)
    lhat = build_laplacian(ds, add_self_loops=True)
    x = Tensor(ds.features)
    labels = ds.labels
    sampler = np.random.default_rng(seed)

    cases: list[GradCheckCase] = []
    for mode in BasisMode:
        for stabilize in (True, False):
            rng = np.random.default_rng(seed)
            net = init_network(
                num_features=ds.num_features,
                num_classes=ds.num_classes,
                mode=mode,
                k_order=3,
                hidden=16,
                dropout_p=0.0,
                stabilize=stabilize,
                rng=rng,
            )
            named = _named_learnables(net)

            def loss_value() -> float:
                logits = network_forward(net, lhat, x, training=False, rng=rng)
                return masked_softmax_cross_entropy(logits, labels, split.train).item()

            with Tape() as tape:
                logits = network_forward(net, lhat, x, training=True, rng=rng)
                loss = masked_softmax_cross_entropy(logits, labels, split.train)
                zero_grads([t for _, t in named])
                tape.backward(loss)

            for name, t in named:
                analytic_full = np.zeros_like(t.data) if t.grad is None else t.grad
                size = t.data.size
                if size > GRADCHECK_SAMPLE:
                    idx = np.sort(sampler.choice(size, size=GRADCHECK_SAMPLE, replace=False))
                else:
                    idx = np.arange(size)
                numeric = _fd_entries(loss_value, t, idx, GRADCHECK_H)
                analytic = analytic_full.ravel()[idx]
                denom = np.maximum(
                    np.maximum(np.abs(analytic), np.abs(numeric)), GRADCHECK_DENOM_FLOOR
                )
                rel = float(np.max(np.abs(analytic - numeric) / denom)) if size else 0.0
                cases.append(
                    GradCheckCase(mode=mode, stabilize=stabilize, tensor=name, rel_err=rel)
                )

    max_rel = max(c.rel_err for c in cases)
    return GradCheckResult(
        max_rel_err=max_rel,
        tolerance=GRADCHECK_TOLERANCE,
        cases=cases,
        elapsed_s=time.monotonic() - started,
    )


def _named_learnables(net: AopfNetwork) -> list[tuple[str, Tensor]]:
    named = []
    for li, layer in enumerate((net.layer1, net.layer2), start=1):
        for k, w in enumerate(layer.weights):
            named.append((f"layer{li}.W{k}", w))
        named.append((f"layer{li}.bias", layer.bias))
    basis = net.basis
    if basis.mode is BasisMode.GEGENBAUER:
        named.append(("basis.lam_raw", basis.lam_raw))
    elif basis.mode is BasisMode.FULL_JACOBI:
        named.append(("basis.alpha_raw", basis.alpha_raw))
        named.append(("basis.beta_raw", basis.beta_raw))
    return named


# ---------------------------------------------------------------------------
# artifact emission

CSV_COLUMNS = [
    "dataset",
    "mode",
    "K",
    "fold",
    "seed",
    "best_epoch",
    "val_acc",
    "test_acc",
    "alpha",
    "beta",
]

CURVE_COLUMNS = ["dataset", "mode", "K", "seed", "epoch", "train_loss", "val_acc"]


def to_json_text(payload: dict) -> str:
    """Canonical JSON artifact: version echo, sorted keys, trailing newline."""
    doc = {"tool_version": __version__, **payload}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _run_row(run: RunResult, fold: int) -> dict:
    return {
        "dataset": run.config["dataset"],
        "mode": run.config["mode"],
        "K": run.config["K"],
        "fold": fold,
        "seed": run.seed,
        "best_epoch": run.best_epoch,
        "val_acc": repr(run.val_acc_best),
        "test_acc": repr(run.test_acc_at_best),
        "alpha": repr(run.param_report.effective_alpha),
        "beta": repr(run.param_report.effective_beta),
    }


def runs_to_csv_text(runs_with_folds: list[tuple[RunResult, int]]) -> str:
    """Flat run-level CSV; fold is -1 for fixed-split runs."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for run, fold in runs_with_folds:
        writer.writerow(_run_row(run, fold))
    return buf.getvalue()


def result_csv_text(result: RunResult | CvResult | AblationTable) -> str:
    if isinstance(result, RunResult):
        pairs = [(result, -1)]
    elif isinstance(result, CvResult):
        pairs = [(r, i) for i, r in enumerate(result.runs)]
    else:
        pairs = []
        for _, _, runs in result.runs:
            if len(runs) == 1:
                pairs.append((runs[0], -1))
            else:
                pairs.extend((r, i) for i, r in enumerate(runs))
    return runs_to_csv_text(pairs)


def curves_csv_text(runs: list[RunResult]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CURVE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for run in runs:
        for epoch, (train_loss, val_acc) in enumerate(run.curve):
            writer.writerow(
                {
                    "dataset": run.config["dataset"],
                    "mode": run.config["mode"],
                    "K": run.config["K"],
                    "seed": run.seed,
                    "epoch": epoch,
                    "train_loss": repr(train_loss),
                    "val_acc": repr(val_acc),
                }
            )
    return buf.getvalue()
