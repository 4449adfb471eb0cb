"""Published CSE-CIC-IDS2018 figures used to check reproductions.

``PUBLISHED_COUNTS`` holds the per-file class counts after cleaning and
``PUBLISHED_METRICS`` the fold-averaged 1-NN metrics (accuracy, F-measure, precision, recall).

Note that the published binary attack total (1,414,765) is not the sum of
the published per-file attack counts (1,404,840); both are kept verbatim.
"""
from __future__ import annotations

import re

PUBLISHED_COUNTS: dict[str, dict[str, int]] = {
    "02-14-2018.csv": {"Benign": 663_808, "FTP-BruteForce": 193_354, "SSH-Bruteforce": 187_589},
    "02-15-2018.csv": {"Benign": 988_050, "DoS-GoldenEye": 41_508, "DoS-Slowloris": 1_099},
    "02-16-2018.csv": {"Benign": 446_772, "DoS-SlowHTTPTest": 139_890, "DoS-Hulk": 461_912},
    "02-22-2018.csv": {"Benign": 1_042_603, "BruteForce-Web": 249, "BruteForce-XSS": 79},
    "02-23-2018.csv": {"Benign": 1_042_301, "BruteForce-Web": 362, "BruteForce-XSS": 151, "SQL-Injection": 53},
    "03-01-2018.csv": {"Benign": 235_778, "Infiltration": 92_403},
    "03-02-2018.csv": {"Benign": 758_334, "BotAttack": 286_191},
}
BINARY_TOTALS = {"Benign": 5_177_646, "Attack": 1_414_765}

PUBLISHED_METRICS: dict[str, tuple[float, float, float, float]] = {
    "02-14-2018.csv": (0.9999, 0.9999, 0.9999, 1.0000),
    "02-15-2018.csv": (0.9999, 0.9997, 0.9996, 0.9998),
    "02-16-2018.csv": (0.9999, 0.9999, 0.9999, 0.9999),
    "02-22-2018.csv": (0.9999, 0.9910, 0.9822, 1.0000),
    "02-23-2018.csv": (0.9998, 0.8765, 0.8806, 0.8725),
    "03-01-2018.csv": (0.7161, 0.4564, 0.4960, 0.4227),
    "03-02-2018.csv": (0.9999, 0.9999, 0.9999, 0.9999),
    "All data": (0.9858, 0.9667, 0.9715, 0.9621),
}

# label strings as they appear in the public CSVs
_ALIASES = {
    "benign": "Benign",
    "ftpbruteforce": "FTP-BruteForce",
    "sshbruteforce": "SSH-Bruteforce",
    "dosattacksgoldeneye": "DoS-GoldenEye",
    "dosattacksslowloris": "DoS-Slowloris",
    "dosattacksslowhttptest": "DoS-SlowHTTPTest",
    "dosattackshulk": "DoS-Hulk",
    "bruteforceweb": "BruteForce-Web",
    "bruteforcexss": "BruteForce-XSS",
    "sqlinjection": "SQL-Injection",
    "infilteration": "Infiltration",
    "infiltration": "Infiltration",
    "bot": "BotAttack",
    "botattack": "BotAttack",
}


def canonical_label(label: str) -> str:
    key = re.sub(r"[^a-z0-9]", "", label.lower())
    return _ALIASES.get(key, label)


def _row(name, observed, expected):
    dev = (observed - expected) / expected if expected else float("inf")
    return {"class": name, "observed": observed, "reference": expected, "relative_deviation": dev}


def compare_counts(file_name: str, per_label_counts: dict[str, int]) -> list[dict] | None:
    """Observed vs published class counts for one file, or None if unknown.

    Classes seen in the file but absent from the reference are reported with
    a reference count of 0.
    """
    ref = PUBLISHED_COUNTS.get(file_name)
    if ref is None:
        return None
    observed: dict[str, int] = {}
    for label, n in per_label_counts.items():
        c = canonical_label(label)
        observed[c] = observed.get(c, 0) + n
    rows = [_row(c, observed.get(c, 0), n) for c, n in ref.items()]
    rows += [_row(c, n, 0) for c, n in sorted(observed.items()) if c not in ref]
    return rows


def compare_binary(benign: int, attack: int) -> list[dict]:
    return [_row("Benign", benign, BINARY_TOTALS["Benign"]), _row("Attack", attack, BINARY_TOTALS["Attack"])]
