"""Portable dataset container, validation, and fold generation.

The on-disk format is one JSON document:

  name          string
  num_nodes     integer        num_features  integer      num_classes  integer
  edges         [[src, dst], ...]   each undirected edge once, src < dst
  features      {"dense": [n*f reals, row-major]} or {"sparse": [[row, col, value], ...]}
  labels        [n integers]
  splits        optional {"train": [...], "val": [...], "test": [...]}

Numbers are plain decimal; NaN/Infinity are rejected.  Sparse feature
triples are densified on load, so the in-memory Dataset always carries a
dense feature matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SchemaError, TooFewNodesError, ValidationError

SPLIT_KEYS = ("train", "val", "test")
NUM_FOLDS = 10


@dataclass
class Dataset:
    name: str
    num_nodes: int
    num_features: int
    num_classes: int
    edges: np.ndarray       # (E, 2) int64, canonical: src < dst, unique
    features: np.ndarray    # (n, f) float64
    labels: np.ndarray      # (n,) int64
    fixed_splits: dict[str, np.ndarray] | None = None


@dataclass(frozen=True)
class Split:
    """One train/val/test partition, as index arrays."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


@dataclass(frozen=True)
class FoldPlan:
    seed: int
    folds: list[Split] = field(default_factory=list)


@dataclass(frozen=True)
class ValidationReport:
    violations: list[str]
    class_histogram: list[int]
    edge_count: int
    homophily_ratio: float | None

    def to_dict(self) -> dict:
        return {
            "violations": self.violations,
            "class_histogram": self.class_histogram,
            "edge_count": self.edge_count,
            "homophily_ratio": self.homophily_ratio,
        }


def _reject_constant(token: str):
    raise SchemaError(f"non-finite number {token!r} in dataset file")


def _require(doc: dict, key: str, kind, what: str):
    if key not in doc:
        raise SchemaError(f"missing field {key!r}")
    v = doc[key]
    if kind is int and isinstance(v, bool):
        raise SchemaError(f"field {key!r} must be {what}")
    if not isinstance(v, kind):
        raise SchemaError(f"field {key!r} must be {what}")
    return v


def _int_array(values, what: str) -> np.ndarray:
    if not isinstance(values, list) or any(
        isinstance(v, bool) or not isinstance(v, int) for v in values
    ):
        raise SchemaError(f"{what} must be an array of integers")
    return np.asarray(values, dtype=np.int64).reshape(-1)


def load_dataset(path) -> Dataset:
    """Read and validate one container file.

    Structural problems (missing file, bad JSON, wrong types) raise
    SchemaError; well-formed documents that break a semantic invariant
    raise ValidationError naming the offending index.
    """
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise SchemaError(f"cannot read dataset file {p}: {e}") from e
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON in {p}: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaError("dataset document must be a JSON object")

    name = _require(doc, "name", str, "a string")
    n = _require(doc, "num_nodes", int, "an integer")
    f = _require(doc, "num_features", int, "an integer")
    c = _require(doc, "num_classes", int, "an integer")
    if n < 1 or f < 1 or c < 1:
        raise SchemaError("num_nodes, num_features, num_classes must be >= 1")

    edges_raw = _require(doc, "edges", list, "an array")
    edges = np.zeros((len(edges_raw), 2), dtype=np.int64)
    seen = set()
    for i, pair in enumerate(edges_raw):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or any(isinstance(v, bool) or not isinstance(v, int) for v in pair)
        ):
            raise SchemaError(f"edge {i} must be an [src, dst] integer pair")
        s, d = pair
        if not (0 <= s < n and 0 <= d < n):
            raise ValidationError(f"edge {i} references a node outside [0, {n})")
        if s == d:
            raise ValidationError(f"edge {i} is a self-loop on node {s}")
        if s > d:
            raise ValidationError(f"edge {i} is not canonical (needs src < dst)")
        if (s, d) in seen:
            raise ValidationError(f"edge {i} duplicates ({s}, {d})")
        seen.add((s, d))
        edges[i] = s, d

    features = _parse_features(_require(doc, "features", dict, "an object"), n, f)

    labels_raw = _require(doc, "labels", list, "an array")
    labels = _int_array(labels_raw, "labels")
    if labels.shape[0] != n:
        raise SchemaError(f"labels has {labels.shape[0]} entries for {n} nodes")
    for i, lab in enumerate(labels):
        if not (0 <= lab < c):
            raise ValidationError(f"label of node {i} is {lab}, outside [0, {c})")
    present = np.bincount(labels, minlength=c)
    if np.any(present == 0):
        missing = int(np.flatnonzero(present == 0)[0])
        raise ValidationError(f"class {missing} has no nodes")

    fixed_splits = None
    if "splits" in doc and doc["splits"] is not None:
        sp = doc["splits"]
        if not isinstance(sp, dict) or set(sp.keys()) != set(SPLIT_KEYS):
            raise SchemaError("splits must be an object with train, val, test arrays")
        fixed_splits = {k: _int_array(sp[k], f"splits.{k}") for k in SPLIT_KEYS}
        _check_splits(fixed_splits, n)

    return Dataset(
        name=name,
        num_nodes=n,
        num_features=f,
        num_classes=c,
        edges=edges,
        features=features,
        labels=labels,
        fixed_splits=fixed_splits,
    )


def _parse_features(fobj: dict, n: int, f: int) -> np.ndarray:
    if set(fobj.keys()) == {"dense"}:
        vals = fobj["dense"]
        if not isinstance(vals, list) or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in vals
        ):
            raise SchemaError("features.dense must be an array of numbers")
        if len(vals) != n * f:
            raise SchemaError(f"features.dense has {len(vals)} values, expected {n * f}")
        return np.asarray(vals, dtype=np.float64).reshape(n, f)
    if set(fobj.keys()) == {"sparse"}:
        triples = fobj["sparse"]
        if not isinstance(triples, list):
            raise SchemaError("features.sparse must be an array of [row, col, value]")
        out = np.zeros((n, f))
        seen = set()
        for i, t in enumerate(triples):
            if (
                not isinstance(t, list)
                or len(t) != 3
                or any(isinstance(v, bool) for v in t)
                or not isinstance(t[0], int)
                or not isinstance(t[1], int)
                or not isinstance(t[2], (int, float))
            ):
                raise SchemaError(f"features.sparse entry {i} must be [row, col, value]")
            r, col, v = t
            if not (0 <= r < n and 0 <= col < f):
                raise ValidationError(f"features.sparse entry {i} indexes outside {n}x{f}")
            if (r, col) in seen:
                raise ValidationError(f"features.sparse entry {i} duplicates ({r}, {col})")
            seen.add((r, col))
            out[r, col] = v
        return out
    raise SchemaError("features must contain exactly one of 'dense' or 'sparse'")


def _check_splits(splits: dict[str, np.ndarray], n: int) -> None:
    taken = set()
    for key in SPLIT_KEYS:
        arr = splits[key]
        for idx in arr:
            if not (0 <= idx < n):
                raise ValidationError(f"splits.{key} index {idx} outside [0, {n})")
            if int(idx) in taken:
                raise ValidationError(f"node {idx} appears in more than one split")
            taken.add(int(idx))


def save_dataset(ds: Dataset, path) -> None:
    """Write the canonical container form: sorted keys, dense features."""
    doc = {
        "name": ds.name,
        "num_nodes": int(ds.num_nodes),
        "num_features": int(ds.num_features),
        "num_classes": int(ds.num_classes),
        "edges": [[int(s), int(d)] for s, d in ds.edges],
        "features": {"dense": [float(v) for v in ds.features.ravel()]},
        "labels": [int(v) for v in ds.labels],
    }
    if ds.fixed_splits is not None:
        doc["splits"] = {k: [int(i) for i in ds.fixed_splits[k]] for k in SPLIT_KEYS}
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")


def validate_dataset(ds: Dataset) -> ValidationReport:
    """Report-only check of the container invariants.

    Never raises; problems are returned as human-readable violation
    strings.  Edge count and homophily are computed on the deduplicated
    canonical edge set.
    """
    violations: list[str] = []
    n, c = ds.num_nodes, ds.num_classes

    labels_ok = ds.labels.shape == (n,)
    if not labels_ok:
        violations.append(f"labels shape {ds.labels.shape} does not match {n} nodes")
    if ds.features.shape != (n, ds.num_features):
        violations.append(
            f"features shape {ds.features.shape} is not ({n}, {ds.num_features})"
        )
    if not np.all(np.isfinite(ds.features)):
        violations.append("features contain non-finite values")

    hist = [0] * c
    if labels_ok:
        for i, lab in enumerate(ds.labels):
            if 0 <= lab < c:
                hist[int(lab)] += 1
            else:
                violations.append(f"label of node {i} is {lab}, outside [0, {c})")
        for cls, count in enumerate(hist):
            if count == 0:
                violations.append(f"class {cls} has no nodes")

    canon = set()
    for i, (s, d) in enumerate(np.asarray(ds.edges, dtype=np.int64)):
        s, d = int(s), int(d)
        if not (0 <= s < n and 0 <= d < n):
            violations.append(f"edge {i} references a node outside [0, {n})")
            continue
        if s == d:
            violations.append(f"edge {i} is a self-loop on node {s}")
            continue
        if s > d:
            violations.append(f"edge {i} is not canonical (needs src < dst)")
            s, d = d, s
        if (s, d) in canon:
            violations.append(f"edge {i} duplicates ({s}, {d})")
        canon.add((s, d))

    homophily = None
    if canon and labels_ok and not violations:
        same = sum(1 for s, d in canon if ds.labels[s] == ds.labels[d])
        homophily = same / len(canon)
    elif canon and labels_ok:
        in_range = [
            (s, d) for s, d in canon if 0 <= ds.labels[s] < c and 0 <= ds.labels[d] < c
        ]
        if in_range:
            homophily = sum(1 for s, d in in_range if ds.labels[s] == ds.labels[d]) / len(in_range)

    if ds.fixed_splits is not None:
        taken: set[int] = set()
        for key in SPLIT_KEYS:
            if key not in ds.fixed_splits:
                violations.append(f"splits is missing {key!r}")
                continue
            for idx in ds.fixed_splits[key]:
                if not (0 <= idx < n):
                    violations.append(f"splits.{key} index {idx} outside [0, {n})")
                elif int(idx) in taken:
                    violations.append(f"node {idx} appears in more than one split")
                else:
                    taken.add(int(idx))

    return ValidationReport(
        violations=violations,
        class_histogram=hist,
        edge_count=len(canon),
        homophily_ratio=homophily,
    )


def make_folds(ds: Dataset, seed: int) -> FoldPlan:
    """Rotating 10-fold plan: fold i tests part i, validates part i+1,
    trains on the remaining eight parts.  Parts are a seeded shuffle cut
    into near-equal pieces, so the test parts partition the node set."""
    n = ds.num_nodes
    if n < NUM_FOLDS:
        raise TooFewNodesError(f"{NUM_FOLDS}-fold plan needs >= {NUM_FOLDS} nodes, got {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    base, extra = divmod(n, NUM_FOLDS)
    parts = []
    at = 0
    for i in range(NUM_FOLDS):
        size = base + (1 if i < extra else 0)
        parts.append(np.sort(perm[at : at + size]))
        at += size

    folds = []
    for i in range(NUM_FOLDS):
        test = parts[i]
        val = parts[(i + 1) % NUM_FOLDS]
        train_parts = [parts[j] for j in range(NUM_FOLDS) if j != i and j != (i + 1) % NUM_FOLDS]
        folds.append(Split(train=np.sort(np.concatenate(train_parts)), val=val, test=test))
    return FoldPlan(seed=seed, folds=folds)
