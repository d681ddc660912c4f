"""Parser for the tab-separated web-page graph distribution
(texas/cornell/wisconsin/chameleon).

Two files per dataset: out1_node_feature_label.txt with one
"node_id <TAB> comma-separated-features <TAB> label" row per node after a
header line, and out1_graph_edges.txt with one "id1 <TAB> id2" directed
edge per row after a header.  Edges are symmetrized downstream; these
datasets ship no fixed split.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import CorruptSourceError
from .parsed import ParsedGraph, canonical_edges

WEBKB_FILES = ("out1_node_feature_label.txt", "out1_graph_edges.txt")


def _data_lines(path: Path) -> list[str]:
    lines = [ln.strip() for ln in path.read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if len(lines) < 2:
        raise CorruptSourceError(f"{path} has no data rows")
    return lines[1:]  # first line is the column header


def parse_webkb(src: Path, name: str) -> ParsedGraph:
    node_path = src / WEBKB_FILES[0]
    edge_path = src / WEBKB_FILES[1]

    rows: dict[int, tuple[list[float], int]] = {}
    for ln in _data_lines(node_path):
        parts = ln.split("\t")
        if len(parts) != 3:
            raise CorruptSourceError(f"{node_path}: row {ln!r} is not id<TAB>features<TAB>label")
        try:
            node = int(parts[0])
            feats = [float(s) for s in parts[1].split(",")]
            label = int(parts[2])
        except ValueError as e:
            raise CorruptSourceError(f"{node_path}: row {ln!r}: {e}") from e
        if node in rows:
            raise CorruptSourceError(f"{node_path}: node {node} appears twice")
        rows[node] = (feats, label)

    n = len(rows)
    if sorted(rows) != list(range(n)):
        raise CorruptSourceError(f"{node_path}: node ids are not exactly 0..{n - 1}")
    f = len(rows[0][0])
    features = np.zeros((n, f))
    labels = np.zeros(n, dtype=np.int64)
    for node, (feats, label) in rows.items():
        if len(feats) != f:
            raise CorruptSourceError(
                f"{node_path}: node {node} has {len(feats)} features, expected {f}"
            )
        if label < 0:
            raise CorruptSourceError(f"{node_path}: node {node} has negative label {label}")
        features[node] = feats
        labels[node] = label

    pairs = []
    for ln in _data_lines(edge_path):
        parts = ln.split("\t")
        if len(parts) != 2:
            raise CorruptSourceError(f"{edge_path}: row {ln!r} is not id1<TAB>id2")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError as e:
            raise CorruptSourceError(f"{edge_path}: row {ln!r}: {e}") from e

    return ParsedGraph(
        name=name,
        num_nodes=n,
        num_features=f,
        num_classes=int(labels.max()) + 1,
        edges=canonical_edges(pairs, n),
        features=features,
        labels=labels,
        splits=None,
    )
