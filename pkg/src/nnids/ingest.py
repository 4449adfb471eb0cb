"""Loading and cleaning of CICFlowMeter flow CSV files.

The public CSE-CIC-IDS2018 day files are plain CSVs with one flow per row,
~80 numeric features, a ``Timestamp`` column and a ``Label`` column.  They
carry a few well known defects that are handled here:

* header lines repeated in the middle of the file,
* empty cells, ``NaN`` and ``Infinity`` feature values,
* columns that hold no information (empty or constant).
"""
from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
import pyarrow as pa
import pyarrow.compute as pc
import pyarrow.csv as pacsv

log = logging.getLogger(__name__)

DEFAULT_LABEL_COLUMN = "Label"
DEFAULT_TIMESTAMP_COLUMN = "Timestamp"
DEFAULT_BENIGN_TOKEN = "Benign"


class FormatError(ValueError):
    """Raised when an input file cannot be turned into a flow dataset."""


@dataclass(frozen=True)
class RawTable:
    """Tokenized CSV contents, one string per cell.

    Cells are kept in a pyarrow table of strings: a day file holds ~80M
    cells, which is far too many for Python lists.
    """

    header: tuple[str, ...]
    cells: pa.Table
    source_path: str
    duplicate_headers: int = 0
    malformed_rows: int = 0

    @property
    def n_rows(self) -> int:
        return self.cells.num_rows

    @property
    def rows(self) -> list[list[str]]:
        cols = [c.to_pylist() for c in self.cells.columns]
        return [list(r) for r in zip(*cols)]

    def column(self, i: int) -> np.ndarray:
        return self.cells.column(i).to_numpy(zero_copy_only=False)


@dataclass(frozen=True)
class SourceRecord:
    """Row accounting for one input file."""

    path: str
    raw_rows: int
    duplicate_headers: int
    malformed_rows: int
    dropped_rows: int
    retained_rows: int


@dataclass(frozen=True)
class FlowDataset:
    features: np.ndarray  # (J, K) float32
    labels: np.ndarray  # (J,) uint8, 0 = benign, 1 = attack
    column_names: tuple[str, ...]
    label_names: np.ndarray  # (J,) original label strings, trimmed
    provenance: tuple[SourceRecord, ...] = ()
    dropped_columns: tuple[str, ...] = ()

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        j, k = self.features.shape
        if len(self.labels) != j or len(self.label_names) != j:
            raise ValueError(f"{j} feature rows but {len(self.labels)} labels")
        if k != len(self.column_names):
            raise ValueError(f"{k} feature columns but {len(self.column_names)} names")
        for a in (self.features, self.labels, self.label_names):
            a.flags.writeable = False

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def name(self) -> str:
        if len(self.provenance) == 1:
            return Path(self.provenance[0].path).name
        return "All data"

    def take(self, rows: np.ndarray) -> "FlowDataset":
        """Row subset, keeping columns and provenance."""
        rows = np.asarray(rows)
        return replace(
            self,
            features=self.features[rows],
            labels=self.labels[rows],
            label_names=self.label_names[rows],
        )


@dataclass
class DatasetSummary:
    """Per-label row counts of a cleaned file, as in the usual dataset summary table."""

    source: str
    per_label_counts: dict[str, int]
    binary_counts: tuple[int, int]
    dropped_rows: int
    duplicate_headers: int = 0
    malformed_rows: int = 0
    dropped_columns: list[str] = field(default_factory=list)

    @property
    def retained_rows(self) -> int:
        return sum(self.binary_counts)

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "per_label_counts": dict(sorted(self.per_label_counts.items())),
            "benign": self.binary_counts[0],
            "attack": self.binary_counts[1],
            "retained_rows": self.retained_rows,
            "dropped_rows": self.dropped_rows,
            "duplicate_headers": self.duplicate_headers,
            "malformed_rows": self.malformed_rows,
            "dropped_columns": list(self.dropped_columns),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_rows(self) -> list[tuple[str, str, int]]:
        """(source, traffic type, count) rows; binary totals come last."""
        rows = [(self.source, k, v) for k, v in sorted(self.per_label_counts.items())]
        rows.append((self.source, "Binary:Benign", self.binary_counts[0]))
        rows.append((self.source, "Binary:Attack", self.binary_counts[1]))
        return rows

    @classmethod
    def combine(cls, summaries: Sequence["DatasetSummary"], source="combined"):
        per_label: Counter = Counter()
        for s in summaries:
            per_label.update(s.per_label_counts)
        dropped_cols = sorted({c for s in summaries for c in s.dropped_columns})
        return cls(
            source=source,
            per_label_counts=dict(per_label),
            binary_counts=(
                sum(s.binary_counts[0] for s in summaries),
                sum(s.binary_counts[1] for s in summaries),
            ),
            dropped_rows=sum(s.dropped_rows for s in summaries),
            duplicate_headers=sum(s.duplicate_headers for s in summaries),
            malformed_rows=sum(s.malformed_rows for s in summaries),
            dropped_columns=dropped_cols,
        )


def parse_csv(path) -> RawTable:
    """Read a CSV file into a :class:`RawTable`.

    Repeated header lines are removed and counted; rows whose cell count
    differs from the header are dropped and counted as malformed.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            first = fh.readline()
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e.strerror or e}") from e
    if not first.strip():
        raise FormatError(f"{path}: no header")
    header = tuple(next(csv.reader([first])))
    names = [f"c{i}" for i in range(len(header))]

    malformed = 0

    def on_invalid(row):
        nonlocal malformed
        malformed += 1
        return "skip"

    try:
        table = pacsv.read_csv(
            path,
            read_options=pacsv.ReadOptions(skip_rows=1, column_names=names),
            parse_options=pacsv.ParseOptions(invalid_row_handler=on_invalid),
            convert_options=pacsv.ConvertOptions(
                column_types={n: pa.string() for n in names},
                strings_can_be_null=False,
                quoted_strings_can_be_null=False,
            ),
        )
    except pa.ArrowInvalid as e:
        if "Empty CSV file" in str(e):
            table = pa.table({n: pa.array([], pa.string()) for n in names})
        else:
            raise FormatError(f"{path}: {e}") from e

    dup = None
    for i, h in enumerate(header):
        eq = pc.equal(table.column(i), h)
        dup = eq if dup is None else pc.and_(dup, eq)
    n_dup = pc.sum(dup).as_py() or 0
    if n_dup:
        table = table.filter(pc.invert(dup))
    if n_dup or malformed:
        log.info("%s: %d repeated header lines, %d malformed rows", path, n_dup, malformed)
    return RawTable(header, table, str(path), n_dup, malformed)


def binarize_labels(labels: Iterable[str], benign_token: str = DEFAULT_BENIGN_TOKEN) -> np.ndarray:
    """Map label strings to 0 (benign) / 1 (attack).

    Matching is case-insensitive and ignores surrounding whitespace.
    """
    token = benign_token.strip().lower()
    if not token:
        raise ValueError("benign token must be non-empty")
    s = pd.Series(list(labels), dtype=object).astype(str)
    is_benign = s.str.strip().str.lower().to_numpy() == token
    return (~is_benign).astype(np.uint8)


def _find_column(header: Sequence[str], name: str) -> int | None:
    want = name.strip().lower()
    for i, h in enumerate(header):
        if h.strip().lower() == want:
            return i
    return None


def clean(
    raw: RawTable,
    label_column: str = DEFAULT_LABEL_COLUMN,
    timestamp_column: str = DEFAULT_TIMESTAMP_COLUMN,
    benign_token: str = DEFAULT_BENIGN_TOKEN,
    drop_columns: Sequence[str] = (),
    drop_constant: bool = True,
) -> FlowDataset:
    """Turn a raw table into a numeric :class:`FlowDataset`.

    Steps, in order:

    1. drop the timestamp column and any column named in `drop_columns`;
    2. drop feature columns that are empty in every row;
    3. drop rows with an empty label or any empty, non-numeric, NaN or
       infinite feature cell (values that overflow float32 count as infinite);
    4. drop columns that are constant over the retained rows
       (skipped when `drop_constant` is false, e.g. before a concat).
    """
    li = _find_column(raw.header, label_column)
    if li is None:
        raise FormatError(f"{raw.source_path}: label column {label_column!r} missing")
    skip = {li}
    ti = _find_column(raw.header, timestamp_column)
    if ti is not None:
        skip.add(ti)
    else:
        log.warning("%s: no %r column", raw.source_path, timestamp_column)
    for name in drop_columns:
        i = _find_column(raw.header, name)
        if i is not None:
            skip.add(i)

    dropped_cols: list[str] = []
    feat_idx: list[int] = []
    for i, h in enumerate(raw.header):
        if i in skip:
            continue
        col = raw.cells.column(i)
        if raw.n_rows and pc.all(pc.equal(pc.utf8_trim_whitespace(col), "")).as_py():
            dropped_cols.append(h.strip())
        else:
            feat_idx.append(i)

    n = raw.n_rows
    label_names = pd.Series(raw.column(li), dtype=object).str.strip().to_numpy(dtype=object)
    keep = label_names != ""
    values = np.empty((n, len(feat_idx)), dtype=np.float32)
    for j, i in enumerate(feat_idx):
        v = pd.to_numeric(pd.Series(raw.column(i), dtype=object), errors="coerce").to_numpy(np.float64)
        with np.errstate(over="ignore"):
            values[:, j] = v
        keep &= np.isfinite(values[:, j])

    features = values[keep]
    label_names = label_names[keep]
    if features.shape[0] == 0:
        raise FormatError(f"{raw.source_path}: empty dataset after cleaning")

    names = [raw.header[i].strip() for i in feat_idx]
    if drop_constant:
        const = np.all(features == features[:1], axis=0)
        dropped_cols += [nm for nm, c in zip(names, const) if c]
        features = np.ascontiguousarray(features[:, ~const])
        names = [nm for nm, c in zip(names, const) if not c]
    if not names:
        raise FormatError(f"{raw.source_path}: no usable feature columns")

    retained = int(features.shape[0])
    record = SourceRecord(
        path=raw.source_path,
        raw_rows=n,
        duplicate_headers=raw.duplicate_headers,
        malformed_rows=raw.malformed_rows,
        dropped_rows=n - retained,
        retained_rows=retained,
    )
    return FlowDataset(
        features=features,
        labels=binarize_labels(label_names, benign_token),
        column_names=tuple(names),
        label_names=label_names,
        provenance=(record,),
        dropped_columns=tuple(dropped_cols),
    )


def drop_constant_columns(ds: FlowDataset) -> FlowDataset:
    """Remove columns that are constant over the rows of `ds`."""
    const = np.all(ds.features == ds.features[:1], axis=0)
    if not const.any():
        return ds
    names = [nm for nm, c in zip(ds.column_names, const) if not c]
    if not names:
        raise FormatError("every feature column is constant")
    return replace(
        ds,
        features=np.ascontiguousarray(ds.features[:, ~const]),
        column_names=tuple(names),
        dropped_columns=ds.dropped_columns
        + tuple(nm for nm, c in zip(ds.column_names, const) if c),
    )


def concat(datasets: Sequence[FlowDataset]) -> FlowDataset:
    """Stack datasets row-wise in argument order."""
    if not datasets:
        raise ValueError("nothing to concatenate")
    first = datasets[0]
    for ds in datasets[1:]:
        if ds.column_names != first.column_names:
            raise FormatError(
                "column mismatch: "
                f"{first.name} has {list(first.column_names)}, "
                f"{ds.name} has {list(ds.column_names)}"
            )
    if len(datasets) == 1:
        return first
    dropped = []
    for ds in datasets:
        dropped += [c for c in ds.dropped_columns if c not in dropped]
    return FlowDataset(
        features=np.concatenate([d.features for d in datasets]),
        labels=np.concatenate([d.labels for d in datasets]),
        column_names=first.column_names,
        label_names=np.concatenate([d.label_names for d in datasets]),
        provenance=tuple(p for d in datasets for p in d.provenance),
        dropped_columns=tuple(dropped),
    )


def summarize(raw: RawTable, cleaned: FlowDataset) -> DatasetSummary:
    counts = Counter(cleaned.label_names.tolist())
    n_attack = int(cleaned.labels.sum())
    return DatasetSummary(
        source=Path(raw.source_path).name,
        per_label_counts={str(k): int(v) for k, v in counts.items()},
        binary_counts=(cleaned.n_rows - n_attack, n_attack),
        dropped_rows=raw.n_rows - cleaned.n_rows,
        duplicate_headers=raw.duplicate_headers,
        malformed_rows=raw.malformed_rows,
        dropped_columns=list(cleaned.dropped_columns),
    )


def load_flows(path, **clean_kwargs) -> tuple[RawTable, FlowDataset]:
    """``parse_csv`` followed by ``clean``."""
    raw = parse_csv(path)
    return raw, clean(raw, **clean_kwargs)
