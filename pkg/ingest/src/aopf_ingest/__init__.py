"""Converters from upstream graph-dataset distributions to the portable
JSON container format."""

from ._version import __version__
from .convert import (
    CHECKSUM_SUFFIXED,
    DATASET_NAMES,
    PLANETOID_NAMES,
    WEBKB_NAMES,
    SourceSpec,
    container_text,
    convert,
    ensure_sources,
    required_files,
    source_checksum,
)
from .errors import (
    ChecksumMismatchError,
    CorruptSourceError,
    IngestError,
    SourceMissingError,
)
from .parsed import ParsedGraph, canonical_edges
from .planetoid import parse_planetoid
from .webkb import parse_webkb

__all__ = [
    "__version__",
    "CHECKSUM_SUFFIXED",
    "DATASET_NAMES",
    "PLANETOID_NAMES",
    "WEBKB_NAMES",
    "SourceSpec",
    "container_text",
    "convert",
    "ensure_sources",
    "required_files",
    "source_checksum",
    "ChecksumMismatchError",
    "CorruptSourceError",
    "IngestError",
    "SourceMissingError",
    "ParsedGraph",
    "canonical_edges",
    "parse_planetoid",
    "parse_webkb",
]
