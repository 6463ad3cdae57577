import os
from pathlib import Path

import numpy as np
import pytest

from fuzzrank.dataset import Dataset

DATA_DIR = Path(__file__).parent / "data"

_acceptance = []
_notes = {}


def find_dataset(*names):
    """First existing file among ``names`` in tests/data or $FUZZRANK_DATA_DIR."""
    roots = [DATA_DIR]
    if os.environ.get("FUZZRANK_DATA_DIR"):
        roots.append(Path(os.environ["FUZZRANK_DATA_DIR"]))
    for root in roots:
        for name in names:
            if (root / name).is_file():
                return root / name
    return None


def make_dataset(features, labels, name="toy"):
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    return Dataset(features, np.asarray(labels), tuple(f"f{i}" for i in range(features.shape[1])), name)


@pytest.fixture
def perfect_and_constant():
    """Feature 0 equals the label, feature 1 is constant, feature 2 is noise."""
    rng = np.random.default_rng(7)
    labels = np.array([0, 1] * 20)
    features = np.column_stack([labels, np.full(40, 3.0), rng.normal(size=40)])
    return make_dataset(features, labels)


@pytest.fixture
def random_dataset():
    def build(n_samples=30, n_features=4, seed=0):
        rng = np.random.default_rng(seed)
        labels = np.array([0, 1] * (n_samples // 2) + [0] * (n_samples % 2))
        features = rng.normal(size=(n_samples, n_features)) + labels[:, None] * rng.uniform(0, 2, n_features)
        return make_dataset(features, labels)

    return build


@pytest.fixture
def note(request):
    """Record a detail line shown under this criterion in the acceptance summary."""
    lines = _notes.setdefault(request.node.nodeid.split("::", 1)[1], [])
    return lines.append


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        _acceptance.append((report.nodeid.split("::", 1)[1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")
        for line in _notes.get(name, []):
            terminalreporter.write_line(f"        {line}")
