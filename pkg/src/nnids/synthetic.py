"""Small synthetic flow CSVs shaped like CICFlowMeter output.

Used by the demos and tests; real evaluations need the public day files.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

FEATURES = [
    "Dst Port", "Protocol", "Flow Duration", "Tot Fwd Pkts", "Tot Bwd Pkts",
    "TotLen Fwd Pkts", "TotLen Bwd Pkts", "Fwd Pkt Len Mean", "Bwd Pkt Len Mean",
    "Flow Byts/s", "Flow Pkts/s", "Flow IAT Mean", "Init Fwd Win Byts", "Bwd PSH Flags",
]


def write_flow_csv(
    path,
    n_benign: int = 300,
    attacks: dict[str, int] | None = None,
    overlap: float = 0.0,
    seed: int = 0,
    n_infinite: int = 3,
    n_empty: int = 2,
    repeat_header_every: int | None = 150,
) -> Path:
    """Write a labelled flow file and return its path.

    Each class draws log-normal features around its own centre; `overlap`
    in [0, 1] pulls attack centres towards the benign one (1 = identical
    distributions).  ``Bwd PSH Flags`` is always 0, so cleaning removes it.
    Some ``Infinity``/``NaN`` cells, empty cells and repeated header lines
    are sprinkled in.
    """
    attacks = {"FTP-BruteForce": 120, "SSH-Bruteforce": 80} if attacks is None else attacks
    rng = np.random.default_rng(seed)
    k = len(FEATURES) - 1
    benign_centre = rng.normal(0.0, 1.5, k)

    rows = []
    for label, n in [("Benign", n_benign), *attacks.items()]:
        if label == "Benign":
            centre = benign_centre
        else:
            centre = (1 - overlap) * rng.normal(0.0, 1.5, k) + overlap * benign_centre
        x = np.exp(centre + rng.normal(0.0, 0.6, (n, k)))
        for r in x:
            rows.append([label, r])
    order = rng.permutation(len(rows))

    header = FEATURES[:2] + ["Timestamp"] + FEATURES[2:] + ["Label"]
    out = []
    for i, j in enumerate(order):
        label, r = rows[j]
        cells = [f"{int(r[0] * 100) % 65536}", "6" if r[1] > 1 else "17"]
        cells += [f"14/02/2018 08:{i // 60 % 60:02d}:{i % 60:02d}"]
        cells += [f"{v:.6g}" for v in r[2:]] + ["0", label]
        out.append(cells)
    bad = rng.choice(len(out), size=n_infinite + n_empty, replace=False)
    for t, i in enumerate(bad):
        col = header.index("Flow Byts/s") if t % 2 == 0 else header.index("Flow Pkts/s")
        if t < n_infinite:
            out[i][col] = "Infinity" if t % 2 == 0 else "NaN"
        else:
            out[i][col] = ""

    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, cells in enumerate(out):
            if repeat_header_every and i and i % repeat_header_every == 0:
                w.writerow(header)
            w.writerow(cells)
    return path
