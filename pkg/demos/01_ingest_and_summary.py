# %%
"""
=================================
Loading and cleaning a flow file
=================================

CICFlowMeter day files contain a handful of rows that cannot be used as
numeric samples: ``Infinity`` or ``NaN`` rates, empty cells, and copies of
the header line in the middle of the file.  This demo writes a small
synthetic file with those defects and walks through what the loader does
with each of them.
"""

import tempfile
from pathlib import Path

from nnids import clean, parse_csv, summarize
from nnids.synthetic import write_flow_csv

workdir = Path(tempfile.mkdtemp())
path = write_flow_csv(workdir / "02-14-2018.csv", n_benign=600,
                      attacks={"FTP-BruteForce": 200, "SSH-Bruteforce": 150}, seed=1)
print(path.read_text().splitlines()[0])

# %%
# Parsing
# -------
#
# ``parse_csv`` tokenizes the file.  Repeated header lines are removed and
# counted; rows with the wrong number of cells would be counted as malformed.

raw = parse_csv(path)
print(f"{raw.n_rows} data rows, {raw.duplicate_headers} repeated headers, "
      f"{raw.malformed_rows} malformed rows")

# %%
# Cleaning
# --------
#
# ``clean`` drops the timestamp, drops rows with any unusable feature cell,
# and drops columns that carry no information.  ``Bwd PSH Flags`` is always
# zero in this file, so it goes.

ds = clean(raw)
print(f"{ds.n_rows} rows x {ds.n_features} features kept")
print("dropped columns:", ds.dropped_columns)
print("labels:", ds.labels[:10], "<-", list(ds.label_names[:10]))

# %%
# Summary table
# -------------

summary = summarize(raw, ds)
for source, label, count in summary.csv_rows():
    print(f"{source:<18}{label:<20}{count:>8}")
