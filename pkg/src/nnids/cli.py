"""Command-line entry point: ``nnids summarize | cache | evaluate``."""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__, knn, reference
from .cache import CacheFormatError, load_cache, save_cache
from .evaluate import (
    CSV_HEADER,
    DEFAULT_FOLDS,
    DEFAULT_SEED,
    cross_validate,
    stratified_subsample,
    table_rows,
)
from .ingest import (
    DEFAULT_BENIGN_TOKEN,
    DEFAULT_LABEL_COLUMN,
    DEFAULT_TIMESTAMP_COLUMN,
    DatasetSummary,
    FormatError,
    clean,
    concat,
    drop_constant_columns,
    parse_csv,
    summarize,
)
from .normalize import FitScope, normalize

log = logging.getLogger("nnids")

CACHE_SUFFIX = ".nnids"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    input_paths: list[str]
    label_column: str = DEFAULT_LABEL_COLUMN
    timestamp_column: str = DEFAULT_TIMESTAMP_COLUMN
    benign_token: str = DEFAULT_BENIGN_TOKEN
    drop_columns: list[str] = field(default_factory=list)
    folds: int = DEFAULT_FOLDS
    seed: int = DEFAULT_SEED
    subsample: int | None = None
    fit_scope: str = FitScope.WHOLE_DATASET.value
    stratified: bool = True
    block_rows: int = knn.DEFAULT_BLOCK_ROWS
    workers: int = 1
    output_path: str | None = None
    output_format: str = "json"

    def validate(self):
        if not self.input_paths:
            raise ConfigError("no input files")
        if self.folds < 2:
            raise ConfigError("--folds must be at least 2")
        if self.subsample is not None and self.subsample < self.folds:
            raise ConfigError("--subsample must be at least --folds")
        if self.block_rows < 1:
            raise ConfigError("--block-rows must be at least 1")
        if self.workers < 1:
            raise ConfigError("--workers must be at least 1")
        FitScope(self.fit_scope)

    def report_dict(self) -> dict:
        """Settings that determine report content; speed-only knobs are excluded."""
        d = asdict(self)
        for key in ("block_rows", "workers", "output_path", "output_format"):
            d.pop(key)
        return d

    def clean_kwargs(self) -> dict:
        return dict(
            label_column=self.label_column,
            timestamp_column=self.timestamp_column,
            benign_token=self.benign_token,
            drop_columns=self.drop_columns,
        )


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_atomic(path, text: str):
    """Write `text` to `path` via a temporary file so a failure leaves nothing behind."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _load_all(cfg: RunConfig, drop_constant: bool):
    def load(path):
        raw = parse_csv(path)
        return raw, clean(raw, drop_constant=drop_constant, **cfg.clean_kwargs())

    paths = cfg.input_paths
    if cfg.workers > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(load, paths))
    return [load(p) for p in paths]


def cmd_summarize(cfg: RunConfig) -> int:
    loaded = _load_all(cfg, drop_constant=True)
    summaries = [summarize(raw, ds) for raw, ds in loaded]
    combined = DatasetSummary.combine(summaries)

    comparisons = {}
    for s in summaries:
        rows = reference.compare_counts(s.source, s.per_label_counts)
        if rows is not None:
            comparisons[s.source] = rows
    if len(comparisons) == len(reference.PUBLISHED_COUNTS):
        comparisons["Binary Class"] = reference.compare_binary(*combined.binary_counts)

    for s in summaries + [combined]:
        print(f"{s.source}: retained {s.retained_rows}, dropped {s.dropped_rows}, "
              f"repeated headers {s.duplicate_headers}, malformed {s.malformed_rows}")
        for label, n in sorted(s.per_label_counts.items()):
            print(f"  {label:<28}{n:>12,}")
        print(f"  {'Binary: Benign':<28}{s.binary_counts[0]:>12,}")
        print(f"  {'Binary: Attack':<28}{s.binary_counts[1]:>12,}")
    for source, rows in comparisons.items():
        for r in rows:
            if r["observed"] != r["reference"]:
                print(f"deviation {source} {r['class']}: {r['observed']:,} vs {r['reference']:,} "
                      f"({r['relative_deviation']:+.4%})")

    if cfg.output_path:
        if cfg.output_format == "csv":
            rows = [r for s in summaries + [combined] for r in s.csv_rows()]
            text = _csv_text(["Data File", "Traffic Type", "Number of Samples"], rows)
        else:
            text = json.dumps({
                "config": cfg.report_dict(),
                "files": [s.to_dict() for s in summaries],
                "combined": combined.to_dict(),
                "reference_comparison": comparisons,
            }, indent=2, sort_keys=True) + "\n"
        write_atomic(cfg.output_path, text)
    return 0


def cmd_cache(cfg: RunConfig) -> int:
    if not cfg.output_path:
        raise ConfigError("cache needs --output DIR")
    out_dir = Path(cfg.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    for _, ds in _load_all(cfg, drop_constant=True):
        if cfg.subsample:
            ds = stratified_subsample(ds, cfg.subsample, cfg.seed)
        unit = normalize(ds, FitScope.WHOLE_DATASET)
        target = out_dir / (Path(ds.provenance[0].path).stem + CACHE_SUFFIX)
        save_cache(target, unit)
        print(f"{target}: {unit.n_rows} rows x {unit.features.shape[1]} columns, "
              f"{len(unit.zero_rows)} zero rows")
    return 0


def _eval_datasets(cfg: RunConfig):
    paths = cfg.input_paths
    caches = [p for p in paths if str(p).endswith(CACHE_SUFFIX)]
    if caches:
        if len(caches) != len(paths):
            raise ConfigError("cache files and CSV files cannot be mixed")
        if cfg.subsample or FitScope(cfg.fit_scope) is not FitScope.WHOLE_DATASET:
            raise ConfigError("cache inputs are already normalized: no --subsample, "
                              "whole-dataset scope only")
        return [(Path(p).name, load_cache(p)) for p in caches]

    loaded = _load_all(cfg, drop_constant=False)
    bases = [ds for _, ds in loaded]
    # constant columns are judged on each full file; "All data" judges them after stacking
    per_file = [drop_constant_columns(ds) for ds in bases]
    if cfg.subsample:
        per_file = [stratified_subsample(ds, cfg.subsample, cfg.seed) for ds in per_file]
        bases = [stratified_subsample(ds, cfg.subsample, cfg.seed) for ds in bases]
    out = [(ds.name, ds) for ds in per_file]
    if len(bases) > 1:
        out.append(("All data", drop_constant_columns(concat(bases))))
    return out


def cmd_evaluate(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    reports = []
    datasets = _eval_datasets(cfg)
    for name, ds in datasets:
        if ds.n_rows < cfg.folds:
            raise ConfigError(f"{name}: {ds.n_rows} rows cannot be split into {cfg.folds} folds")
    for name, ds in datasets:
        log.info("evaluating %s (%d rows)", name, ds.n_rows)
        reports.append(cross_validate(
            ds, k=cfg.folds, seed=cfg.seed, fit_scope=cfg.fit_scope, stratified=cfg.stratified,
            block_rows=cfg.block_rows, workers=cfg.workers, name=name,
        ))
    print(table_rows(reports))

    if cfg.output_path:
        if cfg.output_format == "csv":
            text = _csv_text(CSV_HEADER, [row for r in reports for row in r.csv_rows()])
        else:
            doc = {
                "nnids_version": __version__,
                "config": cfg.report_dict(),
                "inputs": [{"path": str(p), "sha256": file_digest(p)} for p in cfg.input_paths],
                "results": [r.to_dict() for r in reports],
                "notes": [
                    "average = unweighted mean of per-fold metrics; pooled = metrics of summed counts",
                    "'All data' is a fresh cross-validation on the concatenated per-file datasets",
                ],
                "runtime": {
                    "block_rows": cfg.block_rows,
                    "workers": cfg.workers,
                    "wall_time_s": {r.dataset: round(r.wall_time_s, 3) for r in reports},
                    "total_wall_time_s": round(time.perf_counter() - t0, 3),
                },
            }
            text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        write_atomic(cfg.output_path, text)
    return 0


COMMANDS = {"summarize": cmd_summarize, "cache": cmd_cache, "evaluate": cmd_evaluate}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("inputs", nargs="+", metavar="FILE", help="flow CSV files (or .nnids caches for evaluate)")
    common.add_argument("--label-column", default=DEFAULT_LABEL_COLUMN)
    common.add_argument("--timestamp-column", default=DEFAULT_TIMESTAMP_COLUMN)
    common.add_argument("--benign-token", default=DEFAULT_BENIGN_TOKEN)
    common.add_argument("--drop-column", action="append", default=[], dest="drop_columns",
                        help="extra non-feature column to discard (repeatable)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--subsample", type=int, default=None,
                        help="stratified per-file row cap applied before normalization")
    common.add_argument("--workers", type=int, default=None,
                        help=f"worker threads (default: ${knn.WORKERS_ENV} or 1)")
    common.add_argument("-o", "--output", default=None)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="nnids", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("summarize", parents=[common], help="per-label counts after cleaning")
    sub.add_parser("cache", parents=[common], help="write normalized binary caches into --output DIR")
    ev = sub.add_parser("evaluate", parents=[common], help="k-fold cross-validation of 1-NN")
    ev.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    ev.add_argument("--fit-scope", choices=[s.value for s in FitScope], default=FitScope.WHOLE_DATASET.value)
    ev.add_argument("--stratified", action=argparse.BooleanOptionalAction, default=True)
    ev.add_argument("--block-rows", type=int, default=knn.DEFAULT_BLOCK_ROWS)
    return parser


def config_from_args(args) -> RunConfig:
    return RunConfig(
        input_paths=list(args.inputs),
        label_column=args.label_column,
        timestamp_column=args.timestamp_column,
        benign_token=args.benign_token,
        drop_columns=list(args.drop_columns),
        folds=getattr(args, "folds", DEFAULT_FOLDS),
        seed=args.seed,
        subsample=args.subsample,
        fit_scope=getattr(args, "fit_scope", FitScope.WHOLE_DATASET.value),
        stratified=getattr(args, "stratified", True),
        block_rows=getattr(args, "block_rows", knn.DEFAULT_BLOCK_ROWS),
        workers=args.workers if args.workers is not None else knn.default_workers(),
        output_path=args.output,
        output_format=args.format,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        cfg.validate()
        return COMMANDS[args.command](cfg)
    except ConfigError as e:
        print(f"nnids: config error: {e}", file=sys.stderr)
        return 2
    except (FormatError, CacheFormatError, OSError, ValueError) as e:
        print(f"nnids: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
