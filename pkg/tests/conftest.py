import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from backend.models.presets import example_instance  # noqa: E402
from backend.utils.channel import ChannelModelParams, sample_instance  # noqa: E402
from backend.utils.montecarlo import ExperimentConfig  # noqa: E402


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run the full-size acceptance runs')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: full-size run, needs --runslow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def example1():
    return example_instance(1)


@pytest.fixture
def example2():
    return example_instance(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def draw_instance(n_users, seed, p0_dbm=20.0):
    """A ring-deployment instance with Monte Carlo antenna gains."""
    config = ExperimentConfig(n_users_list=(n_users,), p0_dbm_list=(p0_dbm,))
    return sample_instance(ChannelModelParams(), config, np.random.default_rng(seed))


@pytest.fixture
def random_instance():
    return draw_instance
