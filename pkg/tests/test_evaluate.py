import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nnids.evaluate import (
    ConfusionCounts,
    FoldPlan,
    confusion,
    cross_validate,
    kfold_split,
    metrics,
    stratified_subsample,
)
from nnids.ingest import FlowDataset, clean, parse_csv
from nnids.normalize import normalize
from nnids.synthetic import write_flow_csv


def test_kfold_partition():
    plan = kfold_split(np.zeros(10), k=5, seed=1, stratified=False)
    assert plan.sizes().tolist() == [2] * 5
    folds = [set(plan.test_rows(f)) for f in range(5)]
    assert set().union(*folds) == set(range(10))
    assert sum(len(f) for f in folds) == 10


def test_kfold_deterministic():
    labels = np.array([0, 1] * 20)
    a = kfold_split(labels, 5, seed=7)
    b = kfold_split(labels, 5, seed=7)
    assert np.array_equal(a.fold_assignment, b.fold_assignment)
    assert not np.array_equal(a.fold_assignment, kfold_split(labels, 5, seed=8).fold_assignment)


def test_kfold_stratified_counts():
    labels = np.array([0] * 6 + [1] * 4)
    plan = kfold_split(labels, k=2, seed=3, stratified=True)
    for f in range(2):
        rows = plan.test_rows(f)
        assert (labels[rows] == 0).sum() == 3
        assert (labels[rows] == 1).sum() == 2


@pytest.mark.filterwarnings("ignore:a class has fewer")
@given(st.integers(2, 7), st.lists(st.integers(0, 1), min_size=14, max_size=120), st.integers(0, 2**63))
def test_kfold_sizes_balanced(k, labels, seed):
    labels = np.array(labels)
    plan = kfold_split(labels, k, seed, stratified=True)
    sizes = plan.sizes()
    assert sizes.min() >= 1 and sizes.max() - sizes.min() <= 1
    if plan.stratified:
        for c in (0, 1):
            per = np.bincount(plan.fold_assignment[labels == c], minlength=k)
            assert per.max() - per.min() <= 1


def test_kfold_stratified_fallback():
    labels = np.array([0] * 10 + [1] * 2)
    with pytest.warns(UserWarning, match="unstratified"):
        plan = kfold_split(labels, k=5, seed=0, stratified=True)
    assert not plan.stratified


def test_kfold_errors():
    with pytest.raises(ValueError):
        kfold_split(np.zeros(4), k=1)
    with pytest.raises(ValueError):
        kfold_split(np.zeros(4), k=5)


@pytest.mark.parametrize("pred, truth, expected", [
    ([1, 1, 0], [1, 1, 0], ConfusionCounts(tp=2, tn=1, fp=0, fn=0)),
    ([1, 0], [0, 1], ConfusionCounts(tp=0, tn=0, fp=1, fn=1)),
    ([1, 1, 0, 0, 1], [1, 0, 0, 1, 1], ConfusionCounts(tp=2, tn=1, fp=1, fn=1)),
])
def test_confusion(pred, truth, expected):
    assert confusion(pred, truth) == expected


def test_confusion_length_mismatch():
    with pytest.raises(ValueError):
        confusion([1], [1, 0])


def test_metrics_hand_example():
    m = metrics(ConfusionCounts(tp=3, tn=4, fp=1, fn=2))
    p, r = Fraction(3, 4), Fraction(3, 5)
    assert m.precision == float(p) == 0.75
    assert m.recall == float(r) == 0.6
    assert m.accuracy == float(Fraction(7, 10))
    assert m.f_measure == pytest.approx(float(2 * p * r / (p + r)), abs=1e-15)
    assert round(m.f_measure, 6) == 0.666667


def test_metrics_perfect_and_zero_division():
    assert metrics(ConfusionCounts(tp=5, tn=3)).as_row() == (1, 1, 1, 1)
    m = metrics(ConfusionCounts(tp=0, fp=0, fn=4, tn=2))
    assert (m.precision, m.f_measure, m.recall) == (0, 0, 0)
    m = metrics(ConfusionCounts(tn=6))
    assert (m.precision, m.recall, m.accuracy, m.f_measure) == (0, 0, 1, 0)
    with pytest.raises(ValueError):
        metrics(ConfusionCounts())


def _synthetic(tmp_path, **kw):
    return clean(parse_csv(write_flow_csv(tmp_path / "flows.csv", **kw)))


def test_subsample_stratified_by_label(tmp_path):
    ds = _synthetic(tmp_path, n_benign=400, attacks={"A": 90, "B": 7}, seed=4)
    sub = stratified_subsample(ds, 100, seed=42)
    assert sub.n_rows == 100
    names, counts = np.unique(sub.label_names.astype(str), return_counts=True)
    full = dict(zip(*np.unique(ds.label_names.astype(str), return_counts=True)))
    got = dict(zip(names, counts))
    assert set(got) == set(full)
    for name, n in full.items():
        assert abs(got[name] - n * 100 / ds.n_rows) <= 1
    # same seed, same rows; rows keep file order
    again = stratified_subsample(ds, 100, seed=42)
    assert np.array_equal(again.features, sub.features)
    assert stratified_subsample(ds, 10**6) is ds


def test_subsample_keeps_rare_class(tmp_path):
    ds = _synthetic(tmp_path, n_benign=2000, attacks={"SQL": 3}, seed=5)
    sub = stratified_subsample(ds, 50, seed=1)
    assert "SQL" in set(sub.label_names.tolist())
    assert sub.n_rows == 50


def test_cross_validate_structure(tmp_path):
    ds = _synthetic(tmp_path, seed=6)
    rep = cross_validate(ds, k=2, seed=42)
    assert len(rep.per_fold) == 2
    assert sum(f.counts.total for f in rep.per_fold) == ds.n_rows
    for f in rep.per_fold:
        c, m = f.counts, f.metrics
        assert m.accuracy == (c.tp + c.tn) / c.total
        if m.precision + m.recall > 0:
            assert m.f_measure == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall))
        assert all(0 <= v <= 1 for v in m.as_row())
    avg = rep.averaged
    assert avg.accuracy == pytest.approx(np.mean([f.metrics.accuracy for f in rep.per_fold]))
    d = json.loads(rep.to_json())
    assert d["average"]["Accuracy"] == round(avg.accuracy, 6)
    assert d["metadata"]["fit_scope"] == "whole-dataset"
    rows = rep.csv_rows()
    assert len(rows) == 3 and rows[-1][1] == "average"


def test_cross_validate_is_deterministic(tmp_path):
    ds = _synthetic(tmp_path, overlap=0.7, seed=8)
    a = cross_validate(ds, seed=3, block_rows=1)
    b = cross_validate(ds, seed=3, block_rows=4096, workers=4)
    assert a.to_json() == b.to_json()
    c = cross_validate(ds, seed=3, fit_scope="train-fold-only")
    d = cross_validate(ds, seed=3, fit_scope="train-fold-only", workers=2)
    assert c.to_json() == d.to_json()
    assert c.metadata["fit_scope"] == "train-fold-only"


def test_whole_scope_fold_order_independent(tmp_path):
    ds = _synthetic(tmp_path, overlap=0.6, seed=9)
    plan = kfold_split(ds.labels, 5, 42)
    rep = cross_validate(ds, plan=plan)
    # evaluate folds in reverse order by relabelling fold ids
    rev = FoldPlan(4 - plan.fold_assignment, 5, plan.seed, plan.stratified)
    rep_rev = cross_validate(ds, plan=rev)
    assert [f.counts for f in rep.per_fold] == [f.counts for f in reversed(rep_rev.per_fold)]


def test_cross_validate_on_normalized_input(tmp_path):
    ds = _synthetic(tmp_path, seed=10)
    a = cross_validate(ds, seed=1)
    b = cross_validate(normalize(ds), seed=1, name=a.dataset)
    assert [f.counts for f in a.per_fold] == [f.counts for f in b.per_fold]
    with pytest.raises(ValueError):
        cross_validate(normalize(ds), fit_scope="train-fold-only")


def test_one_class_fold_allowed():
    m = np.random.default_rng(0).normal(size=(10, 3)).astype(np.float32)
    ds = FlowDataset(m, np.zeros(10, np.uint8), ("a", "b", "c"), np.array(["Benign"] * 10, dtype=object))
    rep = cross_validate(ds, k=2)
    assert all(f.metrics.precision == 0 and f.metrics.accuracy == 1 for f in rep.per_fold)
