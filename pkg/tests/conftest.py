import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_distinct_spectrum(rng, q, scale=5.0, min_rel_gap=1e-3):
    """Sorted positive spectrum whose adjacent relative gaps exceed ``min_rel_gap``."""
    while True:
        d = np.sort(rng.uniform(0.01, scale, q))[::-1]
        if q == 1 or np.min(-np.diff(d)) / d[0] > min_rel_gap:
            return d


def well_separated_gaussian(rng, p, q, min_rel_gap):
    while True:
        Y = rng.standard_normal((p, q))
        d = np.linalg.svd(Y, compute_uv=False)
        if q == 1 or np.min(-np.diff(d)) / d[0] > min_rel_gap:
            return Y


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
