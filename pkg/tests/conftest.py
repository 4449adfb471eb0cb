import os
from pathlib import Path

import numpy as np
import pytest

ACCEPTANCE_LOG: list[tuple[str, str, str]] = []


@pytest.fixture
def record_criterion():
    """Append (criterion, status, detail) for the end-of-run acceptance table."""
    def record(name, status, detail=""):
        ACCEPTANCE_LOG.append((name, status, detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in ACCEPTANCE_LOG:
        terminalreporter.write_line(f"{status:<5} {name}  {detail}")


@pytest.fixture
def write_csv(tmp_path):
    def write(text, name="flows.csv"):
        p = tmp_path / name
        p.write_text(text)
        return p
    return write


@pytest.fixture
def rng():
    return np.random.default_rng(20220506)


def unit_rows(rng, n, k):
    m = rng.normal(size=(n, k))
    m /= np.linalg.norm(m, axis=1, keepdims=True)
    return m.astype(np.float32)


DATA_DIR = os.environ.get("NNIDS_DATA_DIR")


def dataset_file(name):
    if not DATA_DIR:
        return None
    p = Path(DATA_DIR) / name
    return p if p.exists() else None
