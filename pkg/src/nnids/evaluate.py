"""K-fold cross-validation of the 1-NN classifier.

Attack (label 1) is the positive class.  Fold metrics are averaged with
equal weight per fold; metrics of the pooled confusion counts are kept in
the report metadata as well.

Randomness (subsampling and fold assignment) comes from numpy's PCG64
bit generator seeded with the run seed, so a (data, seed, options) triple
always produces the same folds.
"""
from __future__ import annotations

import json
import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import knn
from .ingest import FlowDataset
from .normalize import FitScope, UnitSphereDataset, normalize

log = logging.getLogger(__name__)

DEFAULT_FOLDS = 5
DEFAULT_SEED = 42
METRIC_COLUMNS = ("Accuracy", "F-measure", "Precision", "Recall")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class FoldPlan:
    fold_assignment: np.ndarray  # (J,) fold id per row
    k: int
    seed: int
    stratified: bool

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_assignment == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_assignment != fold)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold_assignment, minlength=self.k)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn
        )


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    accuracy: float
    f_measure: float

    def as_row(self) -> tuple[float, float, float, float]:
        """Values in report column order: accuracy, F-measure, precision, recall."""
        return (self.accuracy, self.f_measure, self.precision, self.recall)


def kfold_split(labels, k: int = DEFAULT_FOLDS, seed: int = DEFAULT_SEED, stratified: bool = True) -> FoldPlan:
    """Deal a seeded random permutation of the rows round-robin into `k` folds.

    In stratified mode each class is permuted and dealt separately, the
    second class continuing where the first stopped, so fold sizes differ
    by at most one both per class and overall.  If a class has fewer than
    `k` rows the split falls back to unstratified with a warning.
    """
    labels = np.asarray(labels)
    j = len(labels)
    if k < 2:
        raise ValueError("k must be at least 2")
    if j < k:
        raise ValueError(f"cannot split {j} rows into {k} folds")
    rng = make_rng(seed)
    classes = np.unique(labels)
    if stratified and any(np.count_nonzero(labels == c) < k for c in classes):
        warnings.warn(
            f"a class has fewer than {k} rows; using an unstratified split", stacklevel=2
        )
        stratified = False

    assignment = np.empty(j, dtype=np.int64)
    if stratified:
        offset = 0
        for c in classes:
            idx = np.flatnonzero(labels == c)
            perm = rng.permutation(len(idx))
            assignment[idx[perm]] = (offset + np.arange(len(idx))) % k
            offset += len(idx)
    else:
        perm = rng.permutation(j)
        assignment[perm] = np.arange(j) % k
    return FoldPlan(assignment, k, seed, stratified)


def confusion(predicted, truth) -> ConfusionCounts:
    p = np.asarray(predicted).astype(bool)
    t = np.asarray(truth).astype(bool)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    return ConfusionCounts(
        tp=int(np.count_nonzero(p & t)),
        tn=int(np.count_nonzero(~p & ~t)),
        fp=int(np.count_nonzero(p & ~t)),
        fn=int(np.count_nonzero(~p & t)),
    )


def metrics(c: ConfusionCounts) -> Metrics:
    """Precision, recall, accuracy and F-measure.

    Zero denominators give 0: no positive predictions means precision 0,
    no positive rows means recall 0, and P + R = 0 means F = 0.
    """
    if c.total < 1:
        raise ValueError("empty confusion counts")
    p = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    r = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    a = (c.tp + c.tn) / c.total
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return Metrics(p, r, a, f)


def stratified_subsample(ds: FlowDataset, cap: int, seed: int = DEFAULT_SEED) -> FlowDataset:
    """At most `cap` rows, sampled per original label string in proportion.

    Allocation is floor-proportional with the remainder going to the largest
    fractional parts; a class that would get nothing keeps one row (taken
    from the largest class).  Selected rows keep their original order.
    """
    if cap < 1:
        raise ValueError("subsample size must be positive")
    if cap >= ds.n_rows:
        return ds
    names, inverse, counts = np.unique(ds.label_names.astype(str), return_inverse=True, return_counts=True)
    share = counts * cap / ds.n_rows
    alloc = np.floor(share).astype(np.int64)
    left = cap - alloc.sum()
    order = np.lexsort((np.arange(len(names)), -(share - alloc)))
    alloc[order[:left]] += 1
    if cap >= len(names):
        for i in np.flatnonzero(alloc == 0):
            alloc[np.argmax(alloc)] -= 1
            alloc[i] = 1

    rng = make_rng(seed)
    chosen = []
    for i in range(len(names)):
        idx = np.flatnonzero(inverse == i)
        chosen.append(idx[rng.permutation(len(idx))[: alloc[i]]])
    return ds.take(np.sort(np.concatenate(chosen)))


@dataclass
class FoldResult:
    fold: int
    counts: ConfusionCounts
    metrics: Metrics
    n_train: int
    ties: int

    def to_dict(self) -> dict:
        return {
            "fold": self.fold,
            "tp": self.counts.tp,
            "tn": self.counts.tn,
            "fp": self.counts.fp,
            "fn": self.counts.fn,
            "n_train": self.n_train,
            "n_test": self.counts.total,
            "ties": self.ties,
            **_metric_dict(self.metrics),
        }


def _metric_dict(m: Metrics) -> dict:
    return {name: round(v, 6) for name, v in zip(METRIC_COLUMNS, m.as_row())}


@dataclass
class MetricsReport:
    dataset: str
    per_fold: list[FoldResult]
    metadata: dict = field(default_factory=dict)
    wall_time_s: float = 0.0  # kept out of to_dict(): the report content is deterministic

    @property
    def averaged(self) -> Metrics:
        rows = np.array([[f.metrics.precision, f.metrics.recall, f.metrics.accuracy, f.metrics.f_measure]
                         for f in self.per_fold])
        return Metrics(*(float(v) for v in rows.mean(axis=0)))

    @property
    def pooled_counts(self) -> ConfusionCounts:
        total = ConfusionCounts()
        for f in self.per_fold:
            total = total + f.counts
        return total

    @property
    def pooled(self) -> Metrics:
        return metrics(self.pooled_counts)

    @property
    def ties(self) -> int:
        return sum(f.ties for f in self.per_fold)

    def to_dict(self) -> dict:
        pooled = self.pooled_counts
        return {
            "dataset": self.dataset,
            "folds": [f.to_dict() for f in self.per_fold],
            "average": _metric_dict(self.averaged),
            "pooled": {**_metric_dict(self.pooled), "tp": pooled.tp, "tn": pooled.tn,
                       "fp": pooled.fp, "fn": pooled.fn},
            "metadata": {**self.metadata, "tie_count": self.ties},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_rows(self) -> list[list]:
        rows = []
        for f in self.per_fold:
            rows.append([self.dataset, f.fold, *(f"{v:.6f}" for v in f.metrics.as_row()),
                         f.counts.tp, f.counts.tn, f.counts.fp, f.counts.fn])
        c = self.pooled_counts
        rows.append([self.dataset, "average", *(f"{v:.6f}" for v in self.averaged.as_row()),
                     c.tp, c.tn, c.fp, c.fn])
        return rows


CSV_HEADER = ["Data File", "Fold", *METRIC_COLUMNS, "TP", "TN", "FP", "FN"]


def cross_validate(
    dataset: FlowDataset | UnitSphereDataset,
    k: int = DEFAULT_FOLDS,
    seed: int = DEFAULT_SEED,
    fit_scope: FitScope | str = FitScope.WHOLE_DATASET,
    stratified: bool = True,
    block_rows: int = knn.DEFAULT_BLOCK_ROWS,
    workers: int | None = None,
    plan: FoldPlan | None = None,
    name: str | None = None,
) -> MetricsReport:
    """Run k-fold cross-validation of the 1-NN classifier on `dataset`.

    With the whole-dataset scope the data is normalized once, before the
    split.  With ``train-fold-only`` the statistics are refitted on each
    training fold.  A :class:`UnitSphereDataset` (e.g. from a cache file) is
    taken as already normalized and only supports the whole-dataset scope.
    A precomputed `plan` overrides `k`, `seed` and `stratified`.
    """
    t0 = time.perf_counter()
    fit_scope = FitScope(fit_scope)
    labels = np.asarray(dataset.labels)
    if plan is None:
        plan = kfold_split(labels, k, seed, stratified)
    elif len(plan.fold_assignment) != len(labels):
        raise ValueError("fold plan does not match the dataset size")
    if np.any(plan.sizes() == 0):
        raise ValueError("empty fold")

    if isinstance(dataset, UnitSphereDataset):
        if fit_scope is not FitScope.WHOLE_DATASET:
            raise ValueError("a pre-normalized dataset only supports the whole-dataset scope")
        unit = dataset
        sources = []
    else:
        unit = normalize(dataset, FitScope.WHOLE_DATASET) if fit_scope is FitScope.WHOLE_DATASET else None
        sources = [p.path for p in dataset.provenance]

    results = []
    zero_rows = 0
    for fold in range(plan.k):
        train, test = plan.train_rows(fold), plan.test_rows(fold)
        if unit is None:
            fold_unit = normalize(dataset, FitScope.TRAIN_FOLD_ONLY, fit_rows=train)
            zero_rows += len(fold_unit.zero_rows)
        else:
            fold_unit = unit
        index = knn.TrainIndex.build(fold_unit.features[train], labels[train])
        preds = knn.classify_batch(index, fold_unit.features[test], block_rows=block_rows, workers=workers)
        counts = confusion(preds.labels, labels[test])
        results.append(FoldResult(fold, counts, metrics(counts), len(train), preds.n_ties))
        log.info("fold %d: %s", fold, counts)
    if unit is not None:
        zero_rows = len(unit.zero_rows)

    meta = {
        "k": plan.k,
        "seed": plan.seed,
        "stratified": plan.stratified,
        "fit_scope": fit_scope.value,
        "n_rows": int(len(labels)),
        "n_features": int(dataset.features.shape[1]),
        "zero_rows": int(zero_rows),
        "sources": sources,
    }
    if name is None:
        name = dataset.name if isinstance(dataset, FlowDataset) else "cache"
    return MetricsReport(name, results, meta, time.perf_counter() - t0)


def table_rows(reports: Sequence[MetricsReport]) -> str:
    """Plain-text table of fold-averaged metrics, one line per dataset."""
    lines = [f"{'Data File':<24}" + "".join(f"{c:>12}" for c in METRIC_COLUMNS)]
    for r in reports:
        lines.append(f"{r.dataset:<24}" + "".join(f"{v:>12.4f}" for v in r.averaged.as_row()))
    return "\n".join(lines)
