import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from nnids.ingest import FlowDataset
from nnids.normalize import (
    FitScope,
    column_stats,
    l2_normalize_rows,
    normalize,
    zscore,
)


def make_ds(matrix, labels=None):
    m = np.asarray(matrix, dtype=np.float32)
    labels = np.zeros(len(m), np.uint8) if labels is None else np.asarray(labels, np.uint8)
    return FlowDataset(m, labels, tuple(f"c{i}" for i in range(m.shape[1])),
                       np.array(["x"] * len(m), dtype=object))


def col(values):
    return np.asarray(values, dtype=np.float64)[:, None]


def test_stats_two_points():
    s = column_stats(col([1, 3]))
    assert s.means[0] == 2 and s.stds[0] == 1
    assert s.degenerate_columns == ()


def test_stats_constant_column_flagged():
    s = column_stats(col([5, 5, 5]))
    assert s.stds[0] == 0
    assert s.degenerate_columns == (0,)


def test_stats_population_std_matches_oracle():
    s = column_stats(col([1, 2, 3, 4]))
    assert s.means[0] == 2.5
    assert s.stds[0] == pytest.approx(statistics.pstdev([1, 2, 3, 4]), abs=1e-15)
    assert s.stds[0] == pytest.approx(1.118034, abs=1e-6)


def test_stats_empty():
    with pytest.raises(ValueError):
        column_stats(np.zeros((0, 3)))


def test_zscore_examples():
    assert zscore(col([1, 3]), column_stats(col([1, 3])))[:, 0].tolist() == [-1, 1]
    vals = [1, 2, 3]
    mu, sd = statistics.fmean(vals), statistics.pstdev(vals)
    expected = [(v - mu) / sd for v in vals]
    z = zscore(col(vals), column_stats(col(vals)))[:, 0]
    np.testing.assert_allclose(z, expected, atol=1e-12)
    np.testing.assert_allclose(z, [-1.224745, 0, 1.224745], atol=1e-6)


def test_zscore_degenerate_column_maps_to_zero():
    m = np.array([[1, 5], [3, 5]], dtype=float)
    z = zscore(m, column_stats(m))
    assert z[:, 1].tolist() == [0, 0]


def test_zscore_width_mismatch():
    with pytest.raises(ValueError, match="columns"):
        zscore(np.ones((2, 3)), column_stats(np.arange(4.0).reshape(2, 2)))


def test_l2_examples():
    out, zero = l2_normalize_rows(np.array([[3.0, 4.0], [0.0, 0.0], [0.6, 0.8]]))
    np.testing.assert_allclose(out[0], [0.6, 0.8], atol=1e-15)
    assert out[1].tolist() == [0, 0]
    np.testing.assert_allclose(out[2], [0.6, 0.8], atol=1e-7)
    assert zero.tolist() == [1]


def test_normalize_two_by_two():
    u = normalize(make_ds([[1, 3], [3, 1]]))
    r = 1 / math.sqrt(2)
    np.testing.assert_allclose(u.features, [[-r, r], [r, -r]], atol=1e-7)
    assert u.features.dtype == np.float32
    assert u.stats.fit_scope is FitScope.WHOLE_DATASET


def test_train_scope_on_all_rows_equals_whole(rng):
    ds = make_ds(rng.normal(size=(30, 5)) * 10 + 3)
    a = normalize(ds)
    b = normalize(ds, "train-fold-only", fit_rows=np.arange(30))
    assert np.array_equal(a.features, b.features)


def test_train_scope_uses_only_fit_rows(rng):
    m = rng.normal(size=(40, 3))
    ds = make_ds(m)
    u = normalize(ds, FitScope.TRAIN_FOLD_ONLY, fit_rows=np.arange(20))
    np.testing.assert_allclose(u.stats.means, m[:20].astype(np.float32).mean(axis=0), atol=1e-6)
    with pytest.raises(ValueError):
        normalize(ds, FitScope.TRAIN_FOLD_ONLY)


def test_zero_row_reported():
    # second row equals the column means, so its z-scores are all zero
    u = normalize(make_ds([[0, 0], [1, 1], [2, 2]]))
    assert u.zero_rows.tolist() == [1]
    assert not u.features[1].any()


def test_normalize_preserves_order_and_labels(rng):
    m = rng.normal(size=(25, 4))
    labels = rng.integers(0, 2, 25)
    u = normalize(make_ds(m, labels))
    assert u.labels.tolist() == labels.tolist()
    # row order: each output row is the z-scored input row, rescaled
    z = zscore(make_ds(m), column_stats(make_ds(m)))
    cos = np.einsum("ij,ij->i", z / np.linalg.norm(z, axis=1, keepdims=True), u.features)
    np.testing.assert_allclose(cos, 1, atol=1e-6)


matrices = arrays(
    np.float64,
    st.tuples(st.integers(2, 40), st.integers(1, 8)),
    elements=st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=False),
)


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_zscore_columns_standardized(m):
    s = column_stats(m)
    z = zscore(m, s)
    for j in range(m.shape[1]):
        if j in s.degenerate_columns:
            continue
        # tiny spreads relative to magnitude are numerically degenerate
        if s.stds[j] < 1e-6 * max(1.0, np.abs(m[:, j]).max()):
            continue
        assert abs(z[:, j].mean()) < 1e-6
        assert abs(z[:, j].std() - 1) < 1e-4


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_l2_idempotent_and_unit(m):
    once, zero = l2_normalize_rows(m)
    twice, _ = l2_normalize_rows(once)
    np.testing.assert_allclose(twice, once, atol=1e-6)
    norms = np.linalg.norm(once, axis=1)
    mask = np.ones(len(m), bool)
    mask[zero] = False
    np.testing.assert_allclose(norms[mask], 1, atol=1e-5)


@settings(max_examples=40, deadline=None)
@given(matrices, st.floats(1e-3, 1e3))
def test_zscore_scale_invariance(m, c):
    s = column_stats(m)
    if s.degenerate_columns or np.any(s.stds < 1e-3 * np.maximum(1, np.abs(m).max(axis=0))):
        return
    scaled = m.copy()
    scaled[:, 0] *= c
    np.testing.assert_allclose(zscore(scaled, column_stats(scaled))[:, 0], zscore(m, s)[:, 0], atol=1e-6)
