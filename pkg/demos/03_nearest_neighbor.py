# %%
"""
==========================
Exact cosine nearest neighbor
==========================

Each query takes the label of the training row it is most similar to.
The batch kernel screens candidates with a float64 matrix product and then
rescores the near-maximal ones with a fixed summation order, so the answer
does not depend on block size or thread count.  A slow two-loop oracle is
included for checking.
"""

import time

import numpy as np

from nnids import TrainIndex, classify_batch, classify_one, oracle_classify

rng = np.random.default_rng(0)


def unit_rows(n, k):
    m = rng.normal(size=(n, k))
    return (m / np.linalg.norm(m, axis=1, keepdims=True)).astype(np.float32)


# %%
# A two-row example
# -----------------
#
# With training rows e1 (benign) and e2 (attack), a query at 45 degrees is an
# exact tie; the smaller training index wins.

index = TrainIndex.build([[1, 0], [0, 1]], [0, 1])
print(classify_one(index, [0.8, 0.6]))
print(classify_one(index, np.full(2, 2 ** -0.5)))

# %%
# Batch kernel against the oracle
# -------------------------------

train, queries = unit_rows(2000, 40), unit_rows(300, 40)
index = TrainIndex.build(train, rng.integers(0, 2, 2000))

t = time.perf_counter()
fast = classify_batch(index, queries, block_rows=64)
t_fast = time.perf_counter() - t
t = time.perf_counter()
slow = oracle_classify(index, queries[:20])
t_slow = (time.perf_counter() - t) * len(queries) / 20
print(f"batch {t_fast * 1e3:.1f} ms, oracle ~{t_slow * 1e3:.0f} ms for {len(queries)} queries")
print("agree on first 20:", fast.neighbors[:20].tolist() == [p.neighbor_index for p in slow])

# %%
# Block size and workers never change the answer
# ----------------------------------------------

runs = [classify_batch(index, queries, block_rows=b, workers=w) for b in (1, 256) for w in (1, 4)]
print("identical:", all(r.similarities.tobytes() == fast.similarities.tobytes() for r in runs))
