import time

import numpy as np
import pytest

from hypack.geometry import Space
from hypack.lpopt import optimize_bound

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


def _timed_optimum(space, r):
    start = time.perf_counter()
    res = optimize_bound(space, r)
    return res, time.perf_counter() - start


@pytest.fixture(scope="session")
def opt_h2():
    """Optimizer certificate for H^2, r = 1 (default config)."""
    return _timed_optimum(Space.hyperbolic(2), 1.0)


@pytest.fixture(scope="session")
def opt_e1():
    return _timed_optimum(Space.euclidean(1), 0.5)


@pytest.fixture(scope="session")
def opt_e2():
    return _timed_optimum(Space.euclidean(2), 0.5)


@pytest.fixture(scope="session")
def opt_e8():
    return _timed_optimum(Space.euclidean(8), 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
