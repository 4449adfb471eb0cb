"""Exact 1-nearest-neighbor classification by cosine similarity.

Rows of the training matrix and the queries are unit vectors, so the most
similar training row is the argmax of the projection ``Y @ x``.

The batch kernel works in two passes per (query block, training chunk):

1. a float64 matrix product gives approximate scores for every pair;
2. every pair within ``SCREEN_TOL`` of its row maximum is rescored with a
   fixed-order float64 dot product, and the argmax is taken over those
   rescored values with ties going to the smallest training index.

BLAS rounding depends on matrix shapes and thread count, the rescoring does
not, so predictions are bit-identical for any block size or worker count.
The screening tolerance is far above the BLAS error bound (about
``K * 2**-53`` for unit vectors), so the true maximum is never screened out.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

DEFAULT_BLOCK_ROWS = 256
DEFAULT_TRAIN_CHUNK = 32768
SCREEN_TOL = 1e-9
PAIR_SLICE = 1 << 16
WORKERS_ENV = "NNIDS_WORKERS"


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        return max(1, int(value))
    return 1


@dataclass(frozen=True)
class TrainIndex:
    matrix: np.ndarray  # (N, K) float32 unit rows
    labels: np.ndarray  # (N,) {0, 1}

    def __post_init__(self):
        if self.matrix.ndim != 2:
            raise ValueError("training matrix must be 2-D")
        if len(self.labels) != self.matrix.shape[0]:
            raise ValueError("labels length must equal the number of training rows")
        if self.matrix.shape[0] == 0:
            raise ValueError("empty training index")

    @classmethod
    def build(cls, matrix, labels) -> "TrainIndex":
        return cls(np.ascontiguousarray(matrix, dtype=np.float32), np.asarray(labels, dtype=np.uint8))

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_features(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class Prediction:
    label: int
    neighbor_index: int
    similarity: float


@dataclass(frozen=True)
class Predictions:
    """Column-wise batch result; ``preds[m]`` gives a :class:`Prediction`."""

    labels: np.ndarray  # uint8
    neighbors: np.ndarray  # int64
    similarities: np.ndarray  # float64
    tie_counts: np.ndarray  # int64, rows sharing the maximum similarity

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, m) -> Prediction:
        return Prediction(int(self.labels[m]), int(self.neighbors[m]), float(self.similarities[m]))

    def __iter__(self):
        return (self[m] for m in range(len(self)))

    @property
    def n_ties(self) -> int:
        """Number of queries whose maximum was attained by more than one row."""
        return int(np.count_nonzero(self.tie_counts > 1))


def similarity(u, v) -> float:
    """Dot product of two unit vectors, i.e. their cosine."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    acc = 0.0
    for a, b in zip(u.tolist(), v.tolist()):
        acc += a * b
    return acc


def _exact_scores(train: np.ndarray, rows: np.ndarray, q: np.ndarray, qi: np.ndarray) -> np.ndarray:
    """Fixed-order dot products of ``train[rows[p]]`` with ``q[qi[p]]`` for each pair p."""
    out = np.empty(len(rows), dtype=np.float64)
    for lo in range(0, len(rows), PAIR_SLICE):
        y = train[rows[lo:lo + PAIR_SLICE]]
        x = q[qi[lo:lo + PAIR_SLICE]]
        # column-by-column accumulation; order is fixed whatever the pair count
        acc = np.zeros(y.shape[0], dtype=np.float64)
        for k in range(y.shape[1]):
            acc += y[:, k].astype(np.float64) * x[:, k].astype(np.float64)
        out[lo:lo + PAIR_SLICE] = acc
    return out


def _classify_block(index: TrainIndex, y64_chunks, q: np.ndarray):
    b = q.shape[0]
    best = np.full(b, -np.inf)
    best_idx = np.zeros(b, dtype=np.int64)
    ties = np.zeros(b, dtype=np.int64)
    q64 = q.astype(np.float64)
    qnorm = np.sqrt(np.einsum("ij,ij->i", q64, q64))

    for start, y64, ynorm_max in y64_chunks:
        scores = q64 @ y64.T
        rowmax = scores.max(axis=1)
        tol = SCREEN_TOL * np.maximum(1.0, qnorm * ynorm_max)
        qi, cj = np.nonzero(scores >= (rowmax - tol)[:, None])
        del scores
        exact = _exact_scores(index.matrix, start + cj, q, qi)
        # per query: max exact score, then smallest index reaching it
        order = np.lexsort((cj, -exact, qi))
        qi, cj, exact = qi[order], cj[order], exact[order]
        first = np.flatnonzero(np.r_[True, qi[1:] != qi[:-1]])
        top_q = qi[first]
        top_score = exact[first]
        reach = exact == np.repeat(top_score, np.diff(np.r_[first, len(qi)]))
        n_top = np.add.reduceat(reach.astype(np.int64), first)

        better = top_score > best[top_q]
        same = top_score == best[top_q]
        upd = top_q[better]
        best[upd] = top_score[better]
        best_idx[upd] = start + cj[first][better]
        ties[upd] = n_top[better]
        ties[top_q[same]] += n_top[same]
    return best_idx, best, ties


def classify_batch(
    index: TrainIndex,
    queries,
    block_rows: int = DEFAULT_BLOCK_ROWS,
    workers: int | None = None,
    train_chunk: int = DEFAULT_TRAIN_CHUNK,
) -> Predictions:
    """Nearest training row of every query.

    Queries are processed in blocks of `block_rows` rows, distributed over
    `workers` threads; the training matrix is scanned in chunks of
    `train_chunk` rows so that no more than ``block_rows * train_chunk``
    scores are held per worker.
    """
    if block_rows < 1:
        raise ValueError("block_rows must be a positive integer")
    if train_chunk < 1:
        raise ValueError("train_chunk must be a positive integer")
    q = np.ascontiguousarray(queries, dtype=np.float32)
    if q.ndim == 1:
        q = q[None, :]
    if q.shape[1] != index.n_features:
        raise ValueError(f"queries have {q.shape[1]} columns, index has {index.n_features}")
    workers = default_workers() if workers is None else max(1, int(workers))

    m = q.shape[0]
    neighbors = np.zeros(m, dtype=np.int64)
    sims = np.zeros(m, dtype=np.float64)
    ties = np.zeros(m, dtype=np.int64)
    if m == 0:
        return Predictions(np.zeros(0, np.uint8), neighbors, sims, ties)

    chunks = []
    for start in range(0, index.n_rows, train_chunk):
        y64 = index.matrix[start:start + train_chunk].astype(np.float64)
        ynorm = float(np.sqrt(np.einsum("ij,ij->i", y64, y64).max()))
        chunks.append((start, y64, ynorm))

    def run(lo):
        hi = min(lo + block_rows, m)
        idx, best, t = _classify_block(index, chunks, q[lo:hi])
        neighbors[lo:hi] = idx
        sims[lo:hi] = best
        ties[lo:hi] = t

    starts = range(0, m, block_rows)
    if workers == 1:
        for lo in starts:
            run(lo)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, starts))
    return Predictions(index.labels[neighbors].astype(np.uint8), neighbors, sims, ties)


def classify_one(index: TrainIndex, x) -> Prediction:
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("classify_one takes a single vector")
    return classify_batch(index, x[None, :], block_rows=1, workers=1)[0]


def oracle_classify(index: TrainIndex, queries) -> list[Prediction]:
    """Reference 1-NN by two plain Python loops.

    Each dot product is summed with :func:`math.fsum` (correctly rounded) and
    the first maximal row wins.  Slow; meant for checking the batch kernel.
    """
    train = [[float(v) for v in row] for row in np.asarray(index.matrix, dtype=np.float32)]
    labels = [int(v) for v in index.labels]
    out = []
    for x in np.atleast_2d(np.asarray(queries, dtype=np.float32)):
        xs = [float(v) for v in x]
        best, best_n = -math.inf, 0
        for n, row in enumerate(train):
            s = math.fsum(a * b for a, b in zip(row, xs))
            if s > best:
                best, best_n = s, n
        out.append(Prediction(labels[best_n], best_n, best))
    return out
