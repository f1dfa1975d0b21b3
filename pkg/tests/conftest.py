import time

import numpy as np
import pytest

from eemd_haven import _kernels

# lines collected by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES = []
SUITE_BUDGET = 60.0
_started = []


def pytest_sessionstart(session):
    _started.append(time.perf_counter())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
        elapsed = time.perf_counter() - _started[0]
        terminalreporter.write_line("[{0}] criterion 1 runtime: session wall time {1:.1f} s (< {2:.0f} s)".format(
            "PASS" if elapsed < SUITE_BUDGET else "FAIL", elapsed, SUITE_BUDGET))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["numpy", "numba"])
def each_backend(request):
    """Run the test once per kernel backend."""
    if request.param == "numba" and not _kernels.HAS_NUMBA:
        pytest.skip("numba not installed")
    previous = _kernels.use_backend(request.param)
    yield request.param
    _kernels.use_backend(previous)


def two_tone(n=2048):
    t = np.arange(n, dtype=np.float64)
    fast = np.sin(2 * np.pi * 0.25 * t)
    slow = np.sin(2 * np.pi * 0.03 * t)
    return t, fast, slow


def interior(n, frac=0.1):
    cut = int(n * frac)
    return slice(cut, n - cut)
