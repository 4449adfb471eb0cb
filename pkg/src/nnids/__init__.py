"""Exact cosine nearest-neighbor classification of network flows (benign vs attack)."""

__version__ = "0.1.0"

from .ingest import (
    DatasetSummary,
    FlowDataset,
    FormatError,
    RawTable,
    binarize_labels,
    clean,
    concat,
    drop_constant_columns,
    load_flows,
    parse_csv,
    summarize,
)
from .normalize import (
    FitScope,
    NormalizationStats,
    UnitSphereDataset,
    column_stats,
    l2_normalize_rows,
    normalize,
    zscore,
)
from .knn import (
    Prediction,
    Predictions,
    TrainIndex,
    classify_batch,
    classify_one,
    oracle_classify,
    similarity,
)
from .evaluate import (
    ConfusionCounts,
    FoldPlan,
    Metrics,
    MetricsReport,
    confusion,
    cross_validate,
    kfold_split,
    metrics,
    stratified_subsample,
)
from .cache import load_cache, save_cache
