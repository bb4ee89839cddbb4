import os

import numpy as np
import pytest
from hypothesis import settings

from ebfreq.data import MarkerDataset
from ebfreq.simulate import SimConfig, simulate_dataset

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

# Filled by tests/test_acceptance.py; printed once at the end of the session.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def golden_path():
    return os.path.join(DATA_DIR, "golden_counts.tsv")


@pytest.fixture(scope="session")
def sim_small():
    """20k-marker conditional simulation (stand-in model) and its truth."""
    return simulate_dataset(SimConfig(n_markers=20_000, seed=11))


def make_dataset(y, n_y, x=None, n_x=None, ids=None):
    m = len(y)
    ids = ids or [f"m{i}" for i in range(m)]
    x = np.zeros((m, 0), dtype=int) if x is None else np.asarray(x)
    n_x = np.zeros((m, 0), dtype=int) if n_x is None else np.asarray(n_x)
    if x.ndim == 1:
        x, n_x = x.reshape(m, 1), n_x.reshape(m, 1)
    return MarkerDataset(ids, y, n_y, x, n_x)
