"""Small generated datasets: separable toys and random instances for checks."""

from __future__ import annotations

import numpy as np

from .data import Dataset, Split
from .errors import ConfigError


def two_cliques(clique_size: int = 5) -> Dataset:
    """Two complete cliques joined by one bridge edge.

    Class = clique membership, features = one-hot clique indicator, so any
    sensible filter separates the classes perfectly.  Ships a fixed split
    (per clique: 40% train, 20% val, 40% test) for quick end-to-end runs.
    """
    m = clique_size
    if m < 3:
        raise ConfigError(f"clique size must be >= 3, got {m}")
    n = 2 * m
    edges = []
    for offset in (0, m):
        for i in range(m):
            for j in range(i + 1, m):
                edges.append((offset + i, offset + j))
    edges.append((0, m))
    edges = np.asarray(sorted(edges), dtype=np.int64)

    features = np.zeros((n, 2))
    features[:m, 0] = 1.0
    features[m:, 1] = 1.0
    labels = np.zeros(n, dtype=np.int64)
    labels[m:] = 1

    n_train = max(1, int(m * 0.4))
    n_val = max(1, int(m * 0.2))
    train, val, test = [], [], []
    for offset in (0, m):
        ids = list(range(offset, offset + m))
        train += ids[:n_train]
        val += ids[n_train : n_train + n_val]
        test += ids[n_train + n_val :]
    splits = {
        "train": np.asarray(train, dtype=np.int64),
        "val": np.asarray(val, dtype=np.int64),
        "test": np.asarray(test, dtype=np.int64),
    }
    return Dataset(
        name="two-cliques",
        num_nodes=n,
        num_features=2,
        num_classes=2,
        edges=edges,
        features=features,
        labels=labels,
        fixed_splits=splits,
    )


def random_instance(
    num_nodes: int = 20,
    num_features: int = 8,
    num_classes: int = 3,
    edge_prob: float = 0.3,
    seed: int = 0,
) -> Dataset:
    """Erdős–Rényi graph with gaussian features and balanced random labels.

    Used by gradient checks and property tests; every class is guaranteed
    at least one node.
    """
    if num_nodes < num_classes:
        raise ConfigError("need at least one node per class")
    rng = np.random.default_rng(seed)
    edges = [
        (i, j)
        for i in range(num_nodes)
        for j in range(i + 1, num_nodes)
        if rng.random() < edge_prob
    ]
    features = rng.normal(size=(num_nodes, num_features))
    # one forced node per class, the rest uniform, then shuffled
    labels = np.concatenate(
        [
            np.arange(num_classes),
            rng.integers(0, num_classes, size=num_nodes - num_classes),
        ]
    ).astype(np.int64)
    rng.shuffle(labels)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return Dataset(
        name=f"random-{num_nodes}x{num_features}",
        num_nodes=num_nodes,
        num_features=num_features,
        num_classes=num_classes,
        edges=edges,
        features=features,
        labels=labels,
    )


def random_split(ds: Dataset, seed: int, train_frac: float = 0.6, val_frac: float = 0.2) -> Split:
    """A disjoint random train/val/test split covering every node."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(ds.num_nodes)
    n_train = max(1, int(ds.num_nodes * train_frac))
    n_val = max(1, int(ds.num_nodes * val_frac))
    return Split(
        train=np.sort(perm[:n_train]),
        val=np.sort(perm[n_train : n_train + n_val]),
        test=np.sort(perm[n_train + n_val :]),
    )
