import numpy as np
import pytest

from gndmix.mixture import MgndModel
from gndmix.simulation import sample_mixture


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def motivating_truth():
    return MgndModel.from_arrays([0.7, 0.3], [1.0, 5.0], [3.0, 1.0], [5.0, 1.5])


@pytest.fixture
def motivating_sample(motivating_truth):
    return sample_mixture(motivating_truth, 250, np.random.default_rng(7))


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
