"""Command-line front door.

Subcommands: train, cv, ablate, gradcheck, inspect, export-curves.
Exit codes: 0 success, 1 runtime error (the failing error type is printed
to stderr), 2 usage error.  Artifacts echo the resolved config and tool
version, contain no timestamps, and are byte-identical across reruns of
the same invocation.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from ._version import __version__
from .data import load_dataset, make_folds, validate_dataset
from .errors import AopfError, ConfigError
from .polybasis import BasisMode
from .trainer import (
    GRADCHECK_TOLERANCE,
    TrainConfig,
    cross_validate,
    curves_csv_text,
    fixed_split,
    k_ablation,
    result_csv_text,
    run_gradient_check,
    to_json_text,
    train_run,
)

DEFAULT_K_LIST = "2,3,5,7,10"


def _env_seed() -> int:
    raw = os.environ.get("AOPF_SEED", "0")
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"AOPF_SEED must be an integer, got {raw!r}") from e


def _add_train_flags(p: argparse.ArgumentParser, scalar_k: bool = True) -> None:
    p.add_argument("--mode", default="static", help="basis mode: static, gegenbauer, jacobi")
    if scalar_k:
        p.add_argument("--k", type=int, default=3, dest="K", help="polynomial degree K")
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--dropout-p", type=float, default=0.5)
    p.add_argument("--max-epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=50)
    p.add_argument("--seed", type=int, default=None, help="default: $AOPF_SEED or 0")
    p.add_argument("--stabilize", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--add-self-loops", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--row-normalize", action=argparse.BooleanOptionalAction, default=True)


def _add_output_flags(p: argparse.ArgumentParser, formats=("json", "csv")) -> None:
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=formats, default=None,
                   help="default: by --out extension, else json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aopf",
        description="Train and analyze adaptive orthogonal-polynomial graph filters.",
    )
    parser.add_argument("--version", action="version", version=f"aopf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="one run on the dataset's fixed split")
    p.add_argument("--dataset", required=True)
    _add_train_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("cv", help="10-fold cross-validation")
    p.add_argument("--dataset", required=True)
    _add_train_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    _add_output_flags(p)

    p = sub.add_parser("ablate", help="K-ablation sweep over modes")
    p.add_argument("--dataset", required=True)
    _add_train_flags(p, scalar_k=False)
    p.add_argument("--modes", default=None, help="comma-separated modes (default: --mode)")
    p.add_argument("--k", default=DEFAULT_K_LIST, dest="k_list",
                   help=f"comma-separated degrees (default: {DEFAULT_K_LIST})")
    p.add_argument("--protocol", choices=("fixed", "cv"), default="fixed")
    p.add_argument("--jobs", type=int, default=1)
    _add_output_flags(p)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--seed", type=int, default=None)
    _add_output_flags(p, formats=("json",))

    p = sub.add_parser("inspect", help="validate a dataset and report statistics")
    p.add_argument("--dataset", required=True)
    _add_output_flags(p, formats=("json",))

    p = sub.add_parser("export-curves", help="per-epoch (train_loss, val_acc) as CSV")
    p.add_argument("--dataset", required=True)
    _add_train_flags(p)
    p.add_argument("--modes", default=None, help="comma-separated modes (default: --mode)")
    _add_output_flags(p, formats=("csv",))

    return parser


def _config_from(args: argparse.Namespace) -> TrainConfig:
    seed = args.seed if args.seed is not None else _env_seed()
    cfg = TrainConfig(
        mode=BasisMode.from_string(args.mode),
        K=getattr(args, "K", 3),
        hidden=args.hidden,
        lr=args.lr,
        weight_decay=args.weight_decay,
        dropout_p=args.dropout_p,
        max_epochs=args.max_epochs,
        patience=args.patience,
        seed=seed,
        stabilize=args.stabilize,
        add_self_loops=args.add_self_loops,
        row_normalize=args.row_normalize,
    )
    cfg.validate()
    return cfg


def _modes_from(args: argparse.Namespace) -> list[BasisMode]:
    if args.modes is None:
        return [BasisMode.from_string(args.mode)]
    return [BasisMode.from_string(s.strip()) for s in args.modes.split(",") if s.strip()]


def _k_list_from(raw: str) -> list[int]:
    try:
        return [int(s) for s in raw.split(",") if s.strip()]
    except ValueError as e:
        raise ConfigError(f"--k must be comma-separated integers, got {raw!r}") from e


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _resolve_format(args: argparse.Namespace, default: str = "json") -> str:
    if args.format is not None:
        return args.format
    if args.out is not None and args.out.lower().endswith(".csv"):
        return "csv"
    return default


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    ds = load_dataset(args.dataset)
    result = train_run(cfg, ds, fixed_split(ds))
    fmt = _resolve_format(args)
    text = to_json_text(result.to_dict()) if fmt == "json" else result_csv_text(result)
    _emit(text, args.out)
    return 0


def _cmd_cv(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    ds = load_dataset(args.dataset)
    plan = make_folds(ds, cfg.seed)
    result = cross_validate(cfg, ds, plan, jobs=args.jobs)
    fmt = _resolve_format(args)
    text = to_json_text(result.to_dict()) if fmt == "json" else result_csv_text(result)
    _emit(text, args.out)
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    ds = load_dataset(args.dataset)
    table = k_ablation(
        cfg,
        ds,
        k_list=_k_list_from(args.k_list),
        protocol=args.protocol,
        modes=_modes_from(args),
        jobs=args.jobs,
    )
    fmt = _resolve_format(args)
    text = to_json_text(table.to_dict()) if fmt == "json" else result_csv_text(table)
    _emit(text, args.out)
    return 0


def _cmd_gradcheck(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else _env_seed()
    result = run_gradient_check(seed=seed)
    verdict = "PASS" if result.passed else "FAIL"
    print(
        f"gradcheck max relative error {result.max_rel_err:.3e} "
        f"(tolerance {GRADCHECK_TOLERANCE:.0e}): {verdict}"
    )
    if args.out is not None:
        artifact = result.to_dict()
        artifact.pop("elapsed_s")  # keep artifact bytes rerun-identical
        artifact["config"] = {"seed": seed}
        _emit(to_json_text(artifact), args.out)
    return 0 if result.passed else 1


def _cmd_inspect(args: argparse.Namespace) -> int:
    ds = load_dataset(args.dataset)
    report = validate_dataset(ds)
    payload = {
        "dataset": ds.name,
        "num_nodes": ds.num_nodes,
        "num_features": ds.num_features,
        "num_classes": ds.num_classes,
        "has_fixed_splits": ds.fixed_splits is not None,
        "report": report.to_dict(),
    }
    _emit(to_json_text(payload), args.out)
    return 0


def _cmd_export_curves(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    ds = load_dataset(args.dataset)
    if ds.fixed_splits is not None:
        split = fixed_split(ds)
    else:
        split = make_folds(ds, cfg.seed).folds[0]
    runs = [train_run(replace(cfg, mode=mode), ds, split) for mode in _modes_from(args)]
    _emit(curves_csv_text(runs), args.out)
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "cv": _cmd_cv,
    "ablate": _cmd_ablate,
    "gradcheck": _cmd_gradcheck,
    "inspect": _cmd_inspect,
    "export-curves": _cmd_export_curves,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except AopfError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
