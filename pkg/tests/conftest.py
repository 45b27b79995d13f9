import math

import numpy as np
import pytest

from cmdnls.spectral import Grid1D


@pytest.fixture(scope="session")
def ref_grid():
    return Grid1D(8192, 100.0)


@pytest.fixture(scope="session")
def small_grid():
    return Grid1D(1024, 25.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def gaussian_values(grid, center=0.0, width=1.0, k=0.0):
    x = grid.x
    return np.exp(-((x - center) ** 2) / (2 * width**2) + 1j * k * x)


SQRT2 = math.sqrt(2.0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for i in sorted(RESULTS):
        checks = RESULTS[i]
        status = "PASS" if all(c.passed for c in checks) else "FAIL"
        tr.write_line(f"[{status}] criterion {i}")
        for c in checks:
            tr.write_line("    " + c.line())
