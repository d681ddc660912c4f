"""Parser for the pickled citation-network distribution (cora/citeseer/pubmed).

Eight files per dataset: ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index}.
allx/tx are pickled scipy sparse matrices of features, ally/ty one-hot
label matrices, graph an adjacency dict, and test.index the node ids of
the tx rows in storage order.  Node ids are allx rows first, then the test
block; the test block may have holes (citeseer), which become zero-feature
nodes with label 0 that belong to no split.

The pickles were written long ago under old library module paths, so
loading goes through a renaming unpickler.
"""

from __future__ import annotations

import pickle
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import CorruptSourceError
from .parsed import ParsedGraph, canonical_edges

PLANETOID_EXTS = ("x", "y", "tx", "ty", "allx", "ally", "graph", "test.index")
VALIDATION_COUNT = 500

# legacy pickle module paths -> the modern public location of the same class
_RENAMES = {
    "scipy.sparse.csr": "scipy.sparse",
    "scipy.sparse.csc": "scipy.sparse",
    "scipy.sparse.coo": "scipy.sparse",
    "scipy.sparse.lil": "scipy.sparse",
}


class _RenamingUnpickler(pickle.Unpickler):
    def find_class(self, module, name):
        return super().find_class(_RENAMES.get(module, module), name)


def planetoid_files(name: str) -> list[str]:
    return [f"ind.{name}.{ext}" for ext in PLANETOID_EXTS]


def _load_pickle(path: Path):
    try:
        with path.open("rb") as f:
            return _RenamingUnpickler(f, encoding="latin1").load()
    except Exception as e:
        raise CorruptSourceError(f"cannot unpickle {path}: {e}") from e


def _as_dense(m, path: Path) -> np.ndarray:
    if sp.issparse(m):
        return np.asarray(m.todense(), dtype=np.float64)
    if isinstance(m, np.ndarray):
        return np.asarray(m, dtype=np.float64)
    raise CorruptSourceError(f"{path} holds {type(m).__name__}, expected a matrix")


def _read_test_index(path: Path) -> list[int]:
    try:
        lines = path.read_text().split()
        return [int(s) for s in lines]
    except ValueError as e:
        raise CorruptSourceError(f"{path} must hold one integer per line: {e}") from e


def parse_planetoid(src: Path, name: str) -> ParsedGraph:
    paths = {ext: src / f"ind.{name}.{ext}" for ext in PLANETOID_EXTS}
    y = _as_dense(_load_pickle(paths["y"]), paths["y"])
    allx = _as_dense(_load_pickle(paths["allx"]), paths["allx"])
    ally = _as_dense(_load_pickle(paths["ally"]), paths["ally"])
    tx = _as_dense(_load_pickle(paths["tx"]), paths["tx"])
    ty = _as_dense(_load_pickle(paths["ty"]), paths["ty"])
    graph = _load_pickle(paths["graph"])
    if not isinstance(graph, dict):
        raise CorruptSourceError(f"{paths['graph']} holds {type(graph).__name__}, expected a dict")
    order = _read_test_index(paths["test.index"])

    n_known, f = allx.shape
    c = ally.shape[1]
    if tx.shape[0] != len(order) or tx.shape[1] != f or ty.shape != (len(order), c):
        raise CorruptSourceError(
            f"test block shapes {tx.shape}/{ty.shape} do not match {len(order)} "
            f"test index entries with {f} features, {c} classes"
        )
    if not order:
        raise CorruptSourceError("test.index is empty")
    lo, hi = min(order), max(order)
    if lo != n_known:
        raise CorruptSourceError(
            f"test ids start at {lo} but the known block has {n_known} rows"
        )
    if len(set(order)) != len(order):
        raise CorruptSourceError("test.index repeats a node id")

    # contiguous test block; ids absent from test.index (holes) stay zero
    n = hi + 1
    features = np.zeros((n, f))
    one_hot = np.zeros((n, c))
    features[:n_known] = allx
    one_hot[:n_known] = ally
    for row, node in enumerate(order):
        features[node] = tx[row]
        one_hot[node] = ty[row]
    labels = one_hot.argmax(axis=1).astype(np.int64)

    pairs = []
    for u, nbrs in graph.items():
        for v in nbrs:
            pairs.append((u, v))
    edges = canonical_edges(pairs, n)

    n_train = y.shape[0]
    splits = {
        "train": list(range(n_train)),
        "val": list(range(n_train, min(n_train + VALIDATION_COUNT, n_known))),
        "test": sorted(order),
    }
    return ParsedGraph(
        name=name,
        num_nodes=n,
        num_features=f,
        num_classes=c,
        edges=edges,
        features=features,
        labels=labels,
        splits=splits,
    )
