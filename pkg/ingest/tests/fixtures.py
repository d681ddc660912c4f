"""Tiny format-true source trees for both upstream distributions.

The pickled fixtures use protocol 2 like the real distribution; edge
lists include duplicates, reversed pairs, and self-loops on purpose so
canonicalization is exercised end to end.
"""

import pickle
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def _dump(obj, path: Path) -> None:
    with path.open("wb") as f:
        pickle.dump(obj, f, protocol=2)


def _one_hot(labels, c):
    out = np.zeros((len(labels), c))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def make_planetoid_sources(dst: Path, name: str = "cora", gaps: bool = False) -> dict:
    """5 known nodes (2 of them train), 3 test ids; with gaps=True the
    middle test id is absent from test.index, as in the citation set with
    isolated test pages."""
    dst.mkdir(parents=True, exist_ok=True)
    allx = np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 1, 0, 0]],
        dtype=np.float64,
    )
    known_labels = [0, 1, 0, 1, 0]
    ally = _one_hot(known_labels, 2)

    if gaps:
        order = [5, 7]
        tx = np.array([[1, 0, 1, 0], [0, 1, 0, 1]], dtype=np.float64)
        test_labels = [1, 1]
        graph = {0: [1, 5], 1: [0], 2: [3], 3: [2], 4: [0], 5: [0], 7: [0]}
        expected_edges = [(0, 1), (0, 4), (0, 5), (0, 7), (2, 3)]
    else:
        # stored out of sorted order on purpose: row i belongs to order[i]
        order = [6, 5, 7]
        tx = np.array(
            [[0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 0, 1]], dtype=np.float64
        )
        test_labels = [1, 0, 1]
        graph = {0: [1, 5], 1: [0], 2: [3, 3], 3: [2], 4: [4, 0], 5: [0], 6: [7], 7: [6]}
        expected_edges = [(0, 1), (0, 4), (0, 5), (2, 3), (6, 7)]
    ty = _one_hot(test_labels, 2)

    _dump(sp.csr_matrix(allx[:2]), dst / f"ind.{name}.x")
    _dump(ally[:2], dst / f"ind.{name}.y")
    _dump(sp.csr_matrix(tx), dst / f"ind.{name}.tx")
    _dump(ty, dst / f"ind.{name}.ty")
    _dump(sp.csr_matrix(allx), dst / f"ind.{name}.allx")
    _dump(ally, dst / f"ind.{name}.ally")
    _dump(graph, dst / f"ind.{name}.graph")
    (dst / f"ind.{name}.test.index").write_text("".join(f"{i}\n" for i in order))

    return {
        "num_nodes": 8,
        "num_features": 4,
        "num_classes": 2,
        "order": order,
        "tx": tx,
        "test_labels": test_labels,
        "expected_edges": expected_edges,
        "splits": {
            "train": [0, 1],
            "val": [2, 3, 4],
            "test": sorted(order),
        },
    }


def make_webkb_sources(dst: Path, wide: bool = False) -> dict:
    """4 nodes, 3 classes; the edge file carries a duplicate, a reversed
    duplicate, and a self-loop.  wide=True pads features to 20 columns so
    the emitted container takes the sparse-feature form."""
    dst.mkdir(parents=True, exist_ok=True)
    feats = [[1, 0, 1], [0, 1, 1], [1, 1, 0], [0, 0, 1]]
    if wide:
        feats = [row + [0] * 17 for row in feats]
    labels = [0, 1, 2, 1]
    lines = ["node_id\tfeature\tlabel"]
    for i, (row, lab) in enumerate(zip(feats, labels)):
        lines.append(f"{i}\t{','.join(str(v) for v in row)}\t{lab}")
    (dst / "out1_node_feature_label.txt").write_text("\n".join(lines) + "\n")

    edge_lines = ["id1\tid2", "0\t1", "1\t0", "2\t2", "0\t3", "0\t3", "3\t2"]
    (dst / "out1_graph_edges.txt").write_text("\n".join(edge_lines) + "\n")

    return {
        "num_nodes": 4,
        "num_features": 20 if wide else 3,
        "num_classes": 3,
        "features": np.array(feats, dtype=np.float64),
        "labels": labels,
        "expected_edges": [(0, 1), (0, 3), (2, 3)],
    }
