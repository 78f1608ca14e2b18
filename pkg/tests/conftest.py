import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dpcl.data import Dataset, make_synthetic


@pytest.fixture
def small_dataset():
    return make_synthetic(4, 3, 10, 0.6, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def crafted_dataset(x, y, num_classes):
    return Dataset(np.asarray(x, dtype=float), np.asarray(y, dtype=int), num_classes)


# Verdict lines appended by the acceptance suite; echoed after the test
# summary so they survive output capture.
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
