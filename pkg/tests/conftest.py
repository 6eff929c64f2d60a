import numpy as np
import pytest
from hypothesis import settings

from conclab import FiniteMeasure, MarkovChainModel

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def iid_chain():
    """Two-state chain with identical uniform rows."""
    return MarkovChainModel([[0.5, 0.5], [0.5, 0.5]], FiniteMeasure([0.5, 0.5]))


@pytest.fixture
def sticky_chain():
    return MarkovChainModel([[0.9, 0.1], [0.2, 0.8]], FiniteMeasure([0.5, 0.5]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
