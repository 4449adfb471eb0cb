"""Binary cache of a normalized dataset.

Layout, all little-endian::

    b"NNIDS1"                 6 bytes
    rows                      uint64
    cols                      uint64
    features                  rows * cols float32, row-major
    labels                    rows uint8
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .normalize import UnitSphereDataset

MAGIC = b"NNIDS1"
HEADER = struct.Struct("<6sQQ")


class CacheFormatError(ValueError):
    pass


def cache_size(rows: int, cols: int) -> int:
    return HEADER.size + rows * cols * 4 + rows


def dump_bytes(features: np.ndarray, labels: np.ndarray) -> bytes:
    rows, cols = features.shape
    if len(labels) != rows:
        raise ValueError("label count does not match row count")
    body = np.ascontiguousarray(features, dtype="<f4").tobytes()
    return HEADER.pack(MAGIC, rows, cols) + body + np.asarray(labels, dtype=np.uint8).tobytes()


def save_cache(path, data: UnitSphereDataset) -> Path:
    """Write atomically: a partial file never replaces an existing cache."""
    path = Path(path)
    payload = dump_bytes(data.features, data.labels)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_cache(path, mmap: bool = False) -> UnitSphereDataset:
    """Read a cache file.  With ``mmap=True`` the feature matrix is memory-mapped."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
    if len(head) < HEADER.size or head[:6] != MAGIC:
        raise CacheFormatError(f"{path}: unrecognized cache format")
    _, rows, cols = HEADER.unpack(head)
    if path.stat().st_size != cache_size(rows, cols):
        raise CacheFormatError(
            f"{path}: truncated or oversized cache "
            f"({path.stat().st_size} bytes, expected {cache_size(rows, cols)})"
        )
    if mmap:
        features = np.memmap(path, dtype="<f4", mode="r", offset=HEADER.size, shape=(rows, cols))
        labels = np.memmap(path, dtype=np.uint8, mode="r", offset=HEADER.size + rows * cols * 4, shape=(rows,))
    else:
        with open(path, "rb") as fh:
            fh.seek(HEADER.size)
            features = np.fromfile(fh, dtype="<f4", count=rows * cols).reshape(rows, cols)
            labels = np.fromfile(fh, dtype=np.uint8, count=rows)
    features = features.astype(np.float32, copy=False)
    norms = np.einsum("ij,ij->i", features, features, dtype=np.float64)
    zero_rows = np.flatnonzero(norms == 0.0)
    return UnitSphereDataset(features, np.asarray(labels), zero_rows, None)
