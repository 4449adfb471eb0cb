"""Projection of flow features onto the unit sphere.

Two steps: per-column Z-score standardization, then per-row Euclidean
normalization.  After this the dot product of two rows is their cosine
similarity.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .ingest import FlowDataset

DEGENERATE_STD = 1e-12
ZERO_NORM = 1e-12


class FitScope(str, Enum):
    WHOLE_DATASET = "whole-dataset"
    TRAIN_FOLD_ONLY = "train-fold-only"


@dataclass(frozen=True)
class NormalizationStats:
    means: np.ndarray  # float64, length K
    stds: np.ndarray  # float64, population std
    degenerate_columns: tuple[int, ...]
    fit_scope: FitScope = FitScope.WHOLE_DATASET

    @property
    def n_features(self) -> int:
        return len(self.means)


@dataclass(frozen=True)
class UnitSphereDataset:
    features: np.ndarray  # (J, K) float32, unit rows except zero_rows
    labels: np.ndarray
    zero_rows: np.ndarray  # int64 row indices
    stats: NormalizationStats | None = None

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]


def _as_matrix(data) -> np.ndarray:
    m = data.features if isinstance(data, FlowDataset) else np.asarray(data)
    if m.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    return m


def column_stats(data, rows=None, fit_scope=FitScope.WHOLE_DATASET) -> NormalizationStats:
    """Mean and population standard deviation of every column.

    `data` is a FlowDataset or a plain matrix; `rows` restricts the fit to a
    subset of rows.  Statistics are accumulated in float64, one column at a
    time, with a two-pass variance.
    """
    m = _as_matrix(data)
    if rows is not None:
        m = m[rows]
    if m.shape[0] == 0:
        raise ValueError("cannot fit statistics on an empty matrix")
    k = m.shape[1]
    means = np.empty(k)
    stds = np.empty(k)
    for j in range(k):
        col = m[:, j].astype(np.float64)
        mu = col.mean()
        means[j] = mu
        stds[j] = np.sqrt(np.mean((col - mu) ** 2))
    degenerate = tuple(int(j) for j in np.flatnonzero(stds < DEGENERATE_STD))
    return NormalizationStats(means, stds, degenerate, FitScope(fit_scope))


def zscore(data, stats: NormalizationStats) -> np.ndarray:
    """``(x - mean) / std`` column-wise, in float64.  Degenerate columns become 0."""
    m = _as_matrix(data)
    if m.shape[1] != stats.n_features:
        raise ValueError(
            f"matrix has {m.shape[1]} columns, statistics were fitted on {stats.n_features}"
        )
    out = np.zeros(m.shape, dtype=np.float64)
    bad = set(stats.degenerate_columns)
    for j in range(m.shape[1]):
        if j in bad:
            continue
        out[:, j] = (m[:, j].astype(np.float64) - stats.means[j]) / stats.stds[j]
    return out


def l2_normalize_rows(matrix, dtype=None) -> tuple[np.ndarray, np.ndarray]:
    """Divide every row by its Euclidean norm.

    Rows with norm below ``ZERO_NORM`` are set to exactly zero and their
    indices are returned as the second element.
    """
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    dtype = m.dtype if dtype is None else dtype
    m64 = m.astype(np.float64, copy=False)
    norms = np.sqrt(np.einsum("ij,ij->i", m64, m64))
    zero = norms < ZERO_NORM
    safe = np.where(zero, 1.0, norms)
    out = m64 / safe[:, None]
    out[zero] = 0.0
    return out.astype(dtype, copy=False), np.flatnonzero(zero)


def normalize(
    dataset: FlowDataset,
    scope: FitScope | str = FitScope.WHOLE_DATASET,
    fit_rows=None,
) -> UnitSphereDataset:
    """Z-score every column, then scale every row to unit length.

    With ``scope="whole-dataset"`` statistics come from all rows.  With
    ``"train-fold-only"`` they come from `fit_rows` (the training fold) and
    are then applied to every row.  Output features are float32.
    """
    scope = FitScope(scope)
    if scope is FitScope.TRAIN_FOLD_ONLY:
        if fit_rows is None:
            raise ValueError("train-fold-only scope needs fit_rows")
        stats = column_stats(dataset, fit_rows, scope)
    else:
        stats = column_stats(dataset, None, scope)
    unit, zero_rows = l2_normalize_rows(zscore(dataset, stats), dtype=np.float32)
    return UnitSphereDataset(unit, np.asarray(dataset.labels), zero_rows, stats)
