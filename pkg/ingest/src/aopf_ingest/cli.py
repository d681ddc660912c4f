"""Command-line entry: ingest <name> --src DIR --out FILE [--download].

Exit codes: 0 success, 1 conversion error (type and message on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from ._version import __version__
from .convert import DATASET_NAMES, SourceSpec, convert
from .errors import IngestError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ingest",
        description="Convert an upstream graph-dataset distribution into the "
        "portable JSON container.",
    )
    parser.add_argument("--version", action="version", version=f"ingest {__version__}")
    parser.add_argument("name", choices=DATASET_NAMES, help="dataset to convert")
    parser.add_argument("--src", required=True, help="directory holding the source files")
    parser.add_argument("--out", required=True, help="container file to write")
    parser.add_argument(
        "--download",
        action="store_true",
        help="fetch missing source files from the upstream distribution",
    )
    parser.add_argument(
        "--expect-checksum",
        default=None,
        help="fail unless the sources hash to this sha256 hex digest",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = SourceSpec(
        name=args.name,
        src_dir=args.src,
        out_path=args.out,
        download=args.download,
        expect_checksum=args.expect_checksum,
    )
    try:
        summary = convert(spec)
    except IngestError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1
    print(
        f"wrote {summary['out']}: {summary['name']} "
        f"({summary['num_nodes']} nodes, {summary['num_features']} features, "
        f"{summary['num_classes']} classes, {summary['num_edges']} edges, "
        f"checksum {summary['source_checksum'][:8]})"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
