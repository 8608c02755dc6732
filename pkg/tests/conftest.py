# coding: utf-8

import numpy as np
import pytest

from supercool.core import DensitySpec, ModelParams, TimeGrid


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run acceptance-scale tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="need --runslow option to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_uniform() -> DensitySpec:
    return DensitySpec.uniform(0.0, 1.0)


@pytest.fixture
def far_uniform() -> DensitySpec:
    return DensitySpec.uniform(10.0, 11.0)


@pytest.fixture
def params() -> ModelParams:
    return ModelParams(alpha=3.0, epsilon=0.5)


@pytest.fixture
def small_grid() -> TimeGrid:
    return TimeGrid(1.0, 256)
