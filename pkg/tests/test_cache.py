import struct

import numpy as np
import pytest

from nnids.cache import HEADER, CacheFormatError, cache_size, dump_bytes, load_cache, save_cache
from nnids.normalize import UnitSphereDataset


def unit(features, labels):
    f = np.asarray(features, dtype=np.float32)
    return UnitSphereDataset(f, np.asarray(labels, np.uint8), np.zeros(0, np.int64))


def test_two_by_two_layout(tmp_path):
    r = np.float32(2 ** -0.5)
    data = unit([[-r, r], [r, -r]], [0, 1])
    p = save_cache(tmp_path / "x.nnids", data)
    raw = p.read_bytes()
    # 6 magic + 2 * 8 header + 2*2 float32 + 2 label bytes
    assert len(raw) == 6 + 16 + 2 * 2 * 4 + 2 == cache_size(2, 2) == 40
    assert raw[:6] == b"NNIDS1"
    assert struct.unpack("<QQ", raw[6:22]) == (2, 2)
    assert struct.unpack("<4f", raw[22:38]) == (-r, r, r, -r)
    assert raw[38:] == b"\x00\x01"


@pytest.mark.parametrize("mmap", [False, True])
def test_round_trip_bit_exact(tmp_path, rng, mmap):
    f = rng.normal(size=(37, 9)).astype(np.float32)
    f[3] = 0
    data = unit(f, rng.integers(0, 2, 37))
    p = save_cache(tmp_path / "y.nnids", data)
    back = load_cache(p, mmap=mmap)
    assert back.features.tobytes() == data.features.tobytes()
    assert np.array_equal(back.labels, data.labels)
    assert back.zero_rows.tolist() == [3]


def test_idempotent_bytes(tmp_path, rng):
    data = unit(rng.normal(size=(5, 3)), [0, 1, 0, 1, 1])
    a = save_cache(tmp_path / "a.nnids", data).read_bytes()
    b = save_cache(tmp_path / "a.nnids", data).read_bytes()
    assert a == b == dump_bytes(data.features, data.labels)


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.nnids"
    p.write_bytes(b"NOPE!!" + bytes(16))
    with pytest.raises(CacheFormatError, match="unrecognized cache format"):
        load_cache(p)


def test_truncated(tmp_path):
    p = tmp_path / "t.nnids"
    p.write_bytes(HEADER.pack(b"NNIDS1", 3, 2) + bytes(5))
    with pytest.raises(CacheFormatError, match="truncated"):
        load_cache(p)
