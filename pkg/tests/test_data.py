"""Container round trips, schema/semantic errors, folds, and the validator."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aopf.data import (
    NUM_FOLDS,
    Dataset,
    load_dataset,
    make_folds,
    save_dataset,
    validate_dataset,
)
from aopf.errors import SchemaError, TooFewNodesError, ValidationError
from aopf.synthetic import random_instance, random_split, two_cliques


def _tiny_doc(**overrides):
    doc = {
        "name": "tiny",
        "num_nodes": 2,
        "num_features": 2,
        "num_classes": 2,
        "edges": [[0, 1]],
        "features": {"dense": [1.0, 0.0, 0.0, 1.0]},
        "labels": [0, 1],
    }
    doc.update(overrides)
    return doc


def _write(tmp_path, doc, name="ds.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_load_tiny(tmp_path):
    ds = load_dataset(_write(tmp_path, _tiny_doc()))
    assert ds.name == "tiny"
    assert (ds.num_nodes, ds.num_features, ds.num_classes) == (2, 2, 2)
    assert np.array_equal(ds.edges, [[0, 1]])
    assert np.array_equal(ds.features, np.eye(2))
    assert np.array_equal(ds.labels, [0, 1])
    assert ds.fixed_splits is None


def test_missing_file_is_schema_error(tmp_path):
    with pytest.raises(SchemaError):
        load_dataset(tmp_path / "missing.json")


def test_structural_schema_errors(tmp_path):
    cases = [
        _tiny_doc(num_nodes="2"),
        _tiny_doc(num_classes=True),
        _tiny_doc(num_features=0),
        _tiny_doc(labels=[0]),
        _tiny_doc(labels=[0, 1.5]),
        _tiny_doc(edges=[[0]]),
        _tiny_doc(features={"dense": [1.0, 0.0]}),
        _tiny_doc(features={"dense": [1.0, 0.0, 0.0, 1.0], "sparse": []}),
        _tiny_doc(features={}),
        _tiny_doc(splits={"train": [0], "val": [1]}),
    ]
    doc = _tiny_doc()
    del doc["labels"]
    cases.append(doc)
    for i, bad in enumerate(cases):
        with pytest.raises(SchemaError):
            load_dataset(_write(tmp_path, bad, f"bad{i}.json"))


def test_non_finite_numbers_rejected(tmp_path):
    p = tmp_path / "nan.json"
    doc = _tiny_doc()
    doc["features"] = {"dense": [1.0, 0.0, 0.0, None]}
    p.write_text(json.dumps(doc).replace("null", "NaN"))
    with pytest.raises(SchemaError):
        load_dataset(p)


def test_bad_json_is_schema_error(tmp_path):
    p = tmp_path / "trunc.json"
    p.write_text('{"name": "x"')
    with pytest.raises(SchemaError):
        load_dataset(p)


def test_semantic_validation_errors(tmp_path):
    cases = [
        (_tiny_doc(edges=[[0, 2]]), "edge 0"),
        (_tiny_doc(edges=[[1, 1]]), "edge 0"),
        (_tiny_doc(edges=[[1, 0]]), "edge 0"),
        (_tiny_doc(edges=[[0, 1], [0, 1]]), "edge 1"),
        (_tiny_doc(labels=[0, 2]), "node 1"),
        (_tiny_doc(labels=[0, 0]), "class 1"),
        (_tiny_doc(splits={"train": [0], "val": [0], "test": [1]}), "more than one"),
        (_tiny_doc(splits={"train": [0], "val": [5], "test": [1]}), "outside"),
    ]
    for i, (bad, fragment) in enumerate(cases):
        with pytest.raises(ValidationError, match=fragment):
            load_dataset(_write(tmp_path, bad, f"sem{i}.json"))


def test_label_equal_to_num_classes_names_node(tmp_path):
    bad = _tiny_doc(labels=[0, 2], num_classes=2)
    with pytest.raises(ValidationError, match=r"node 1 is 2"):
        load_dataset(_write(tmp_path, bad))


def test_sparse_features_densify(tmp_path):
    doc = _tiny_doc(features={"sparse": [[0, 0, 2.5], [1, 1, -1.0]]})
    ds = load_dataset(_write(tmp_path, doc))
    np.testing.assert_array_equal(ds.features, [[2.5, 0.0], [0.0, -1.0]])

    dup = _tiny_doc(features={"sparse": [[0, 0, 1.0], [0, 0, 2.0]]})
    with pytest.raises(ValidationError):
        load_dataset(_write(tmp_path, dup, "dup.json"))
    oob = _tiny_doc(features={"sparse": [[0, 7, 1.0]]})
    with pytest.raises(ValidationError):
        load_dataset(_write(tmp_path, oob, "oob.json"))


def test_round_trip_preserves_everything(tmp_path):
    ds = two_cliques()
    out = tmp_path / "round.json"
    save_dataset(ds, out)
    back = load_dataset(out)
    assert back.name == ds.name
    assert np.array_equal(back.edges, ds.edges)
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)
    for key in ("train", "val", "test"):
        assert np.array_equal(back.fixed_splits[key], ds.fixed_splits[key])

    save_dataset(back, tmp_path / "again.json")
    assert out.read_text() == (tmp_path / "again.json").read_text()


def test_two_cliques_shape():
    ds = two_cliques()
    assert ds.num_nodes == 10
    # 2 * C(5,2) intra-clique edges plus the bridge
    assert ds.edges.shape == (21, 2)
    assert sorted(np.bincount(ds.labels)) == [5, 5]
    sp = ds.fixed_splits
    assert len(sp["train"]) == 4 and len(sp["val"]) == 2 and len(sp["test"]) == 4


def test_validator_clean_two_cliques():
    report = validate_dataset(two_cliques())
    assert report.violations == []
    assert report.edge_count == 21
    assert report.class_histogram == [5, 5]
    assert report.homophily_ratio == pytest.approx(20.0 / 21.0)


def test_validator_flags_problems():
    ds = two_cliques()
    ds.edges = np.vstack([ds.edges, [[3, 3]], [[2, 0]], [[0, 1]]])
    ds.labels = ds.labels.copy()
    ds.labels[0] = 9
    report = validate_dataset(ds)
    text = "\n".join(report.violations)
    assert "self-loop" in text
    assert "not canonical" in text
    assert "duplicates" in text
    assert "outside" in text
    assert report.to_dict()["edge_count"] == 21


def test_random_instance_balanced():
    ds = random_instance(num_nodes=20, num_classes=3, seed=5)
    assert np.bincount(ds.labels, minlength=3).min() >= 1
    assert validate_dataset(ds).violations == []


def test_random_homophily_near_half(rng):
    # labels are independent of edges, so same-label edges occur at the
    # collision rate of a 2-class draw
    ds = random_instance(num_nodes=400, num_classes=2, edge_prob=0.05, seed=3)
    r = validate_dataset(ds).homophily_ratio
    assert abs(r - 0.5) < 0.05


def test_random_split_partitions():
    ds = random_instance(num_nodes=30, seed=1)
    sp = random_split(ds, seed=2)
    joined = np.concatenate([sp.train, sp.val, sp.test])
    assert np.array_equal(np.sort(joined), np.arange(30))
    assert len(sp.train) == 18 and len(sp.val) == 6


def test_folds_partition_and_rotate():
    ds = random_instance(num_nodes=53, seed=0)
    plan = make_folds(ds, seed=9)
    assert len(plan.folds) == NUM_FOLDS
    tests = [f.test for f in plan.folds]
    assert np.array_equal(np.sort(np.concatenate(tests)), np.arange(53))
    sizes = sorted(len(t) for t in tests)
    assert sizes == [5] * 7 + [6] * 3
    for i, f in enumerate(plan.folds):
        assert np.array_equal(f.val, tests[(i + 1) % NUM_FOLDS])
        whole = np.concatenate([f.train, f.val, f.test])
        assert np.array_equal(np.sort(whole), np.arange(53))
        assert np.array_equal(f.train, np.sort(f.train))


def test_folds_deterministic_and_seed_sensitive():
    ds = random_instance(num_nodes=40, seed=0)
    a = make_folds(ds, seed=4)
    b = make_folds(ds, seed=4)
    c = make_folds(ds, seed=5)
    for fa, fb in zip(a.folds, b.folds):
        assert np.array_equal(fa.train, fb.train)
        assert np.array_equal(fa.test, fb.test)
    assert any(not np.array_equal(fa.test, fc.test) for fa, fc in zip(a.folds, c.folds))


def test_folds_need_enough_nodes():
    ds = random_instance(num_nodes=9, num_classes=2, seed=0)
    with pytest.raises(TooFewNodesError):
        make_folds(ds, seed=0)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(min_value=10, max_value=120), seed=st.integers(0, 1000))
def test_fold_partition_property(n, seed):
    ds = random_instance(num_nodes=n, num_classes=2, seed=0)
    plan = make_folds(ds, seed=seed)
    tests = np.concatenate([f.test for f in plan.folds])
    assert np.array_equal(np.sort(tests), np.arange(n))
    sizes = [len(f.test) for f in plan.folds]
    assert max(sizes) - min(sizes) <= 1
    for f in plan.folds:
        assert set(f.train) | set(f.val) | set(f.test) == set(range(n))
        assert not (set(f.train) & set(f.test))
        assert not (set(f.val) & set(f.test))
        assert not (set(f.train) & set(f.val))
