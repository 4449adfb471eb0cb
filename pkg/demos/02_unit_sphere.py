# %%
"""
=============================
Projecting flows onto a sphere
=============================

Flow features span many orders of magnitude (bytes per second next to
packet counts).  Standardizing each column and then scaling each row to
unit length turns the dot product of two flows into their cosine
similarity, which is what the nearest-neighbor search uses.
"""

import tempfile
from pathlib import Path

import numpy as np

from nnids import column_stats, l2_normalize_rows, load_flows, normalize, zscore
from nnids.synthetic import write_flow_csv

path = write_flow_csv(Path(tempfile.mkdtemp()) / "day.csv", seed=2)
_, ds = load_flows(path)
print("raw column ranges:")
for name, lo, hi in zip(ds.column_names, ds.features.min(axis=0), ds.features.max(axis=0)):
    print(f"  {name:<20}{lo:>12.4g}{hi:>12.4g}")

# %%
# Column standardization
# ----------------------
#
# Means and population standard deviations are accumulated in float64.

stats = column_stats(ds)
z = zscore(ds, stats)
print("column means after z-score:", np.round(z.mean(axis=0), 12))
print("column stds after z-score: ", np.round(z.std(axis=0), 12))

# %%
# Row normalization
# -----------------

unit, zero_rows = l2_normalize_rows(z, dtype=np.float32)
print("row norms:", np.linalg.norm(unit[:5], axis=1), "zero rows:", zero_rows)

# %%
# ``normalize`` does both steps.  By default the statistics come from the
# whole file; ``scope="train-fold-only"`` fits them on a subset instead.

u = normalize(ds)
assert np.array_equal(u.features, unit)
half = np.arange(ds.n_rows // 2)
u_train = normalize(ds, "train-fold-only", fit_rows=half)
print("max change when fitting on half the rows:", np.abs(u_train.features - u.features).max())
