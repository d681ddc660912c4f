"""The parser-independent intermediate form every source format reduces to."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CorruptSourceError


@dataclass
class ParsedGraph:
    """One dataset in memory, already canonical.

    edges are undirected, deduplicated, self-loop free, each stored once as
    (src, dst) with src < dst, lexicographically sorted.  splits is None
    for datasets whose evaluation protocol generates folds downstream.
    """

    name: str
    num_nodes: int
    num_features: int
    num_classes: int
    edges: list[tuple[int, int]]
    features: np.ndarray
    labels: np.ndarray
    splits: dict[str, list[int]] | None = None


def canonical_edges(pairs, num_nodes: int) -> list[tuple[int, int]]:
    """Symmetrize, deduplicate, strip self-loops, sort lexicographically."""
    out = set()
    for u, v in pairs:
        u, v = int(u), int(v)
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise CorruptSourceError(f"edge ({u}, {v}) references a node outside [0, {num_nodes})")
        if u == v:
            continue
        out.add((u, v) if u < v else (v, u))
    return sorted(out)
