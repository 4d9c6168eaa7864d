import warnings

import numpy as np
import pytest

from hmcpflow.harness import generate_random


def central_jacobian(fun, x, rel_step=1e-6):
    """Central-difference Jacobian with per-coordinate steps ``rel_step * max(1, |x_j|)``."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(fun(x))
    J = np.zeros((f0.size, x.size))
    for j in range(x.size):
        h = rel_step * max(1.0, abs(x[j]))
        e = np.zeros_like(x)
        e[j] = h
        J[:, j] = (np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * h)
    return J


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.abs(a - b).max() / max(1.0, np.abs(b).max()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["lp", "qp", "expsum"])
def family(request):
    return request.param


@pytest.fixture
def program(family):
    return generate_random(family, 5, 2, seed=3)


@pytest.fixture(autouse=True)
def _quiet_lsoda():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="lsoda")
        yield


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
