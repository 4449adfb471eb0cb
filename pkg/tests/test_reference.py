from nnids import reference


def test_binary_benign_total_is_sum_of_files():
    assert sum(f["Benign"] for f in reference.PUBLISHED_COUNTS.values()) == reference.BINARY_TOTALS["Benign"]


def test_binary_attack_total_differs_from_sum_of_files():
    # published inconsistency, kept verbatim
    attacks = sum(n for f in reference.PUBLISHED_COUNTS.values() for c, n in f.items() if c != "Benign")
    assert attacks == 1_404_840
    assert reference.BINARY_TOTALS["Attack"] - attacks == 9_925


def test_canonical_labels():
    assert reference.canonical_label("DoS attacks-GoldenEye") == "DoS-GoldenEye"
    assert reference.canonical_label("Brute Force -XSS") == "BruteForce-XSS"
    assert reference.canonical_label("Infilteration") == "Infiltration"
    assert reference.canonical_label("Something") == "Something"


def test_compare_counts():
    rows = reference.compare_counts("03-01-2018.csv", {"Benign": 235_778, "Infilteration": 92_403 - 92})
    by = {r["class"]: r for r in rows}
    assert by["Benign"]["relative_deviation"] == 0
    assert abs(by["Infiltration"]["relative_deviation"] + 92 / 92_403) < 1e-12
    assert reference.compare_counts("other.csv", {}) is None
    extra = reference.compare_counts("02-22-2018.csv", {"Benign": 1, "SQL Injection": 34})
    assert {"class": "SQL-Injection", "observed": 34, "reference": 0,
            "relative_deviation": float("inf")} in extra
