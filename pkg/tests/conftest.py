import numpy as np
import pytest

from markov_hoeffding.chains import FiniteKernel

TWO_STATE = [[0.9, 0.1], [0.2, 0.8]]


@pytest.fixture
def two_state():
    return FiniteKernel(np.array(TWO_STATE))


def random_kernel(rng, n):
    P = rng.random((n, n)) + 0.05
    return FiniteKernel(P / P.sum(axis=1, keepdims=True))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
