import sys

import numpy as np
import pytest

from tikhonov_kaczmarz import LinearOperator, OperatorSystem, build_system
from tikhonov_kaczmarz.elliptic import Grid1D


def scalar_system(x0=1.0):
    """F(x) = x on the real line."""
    return OperatorSystem((LinearOperator([[1.0]]),), np.array([x0]))


@pytest.fixture
def scalar():
    return scalar_system()


@pytest.fixture(scope="session")
def c_small():
    return build_system("c", 2, Grid1D(49))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        status, title, detail = results[n]
        terminalreporter.write_line(f"{status} criterion {n:2d}: {title} -- {detail}")
