import numpy as np
import pytest
from threadpoolctl import threadpool_limits

from exactpen.scalar_phi import make_phi


@pytest.fixture(scope="session", autouse=True)
def single_thread():
    # determinism claims are per thread count; pin one
    with threadpool_limits(limits=1):
        yield


@pytest.fixture
def linear():
    return make_phi("Linear")


@pytest.fixture
def scad():
    return make_phi("Scad", [3.7])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
