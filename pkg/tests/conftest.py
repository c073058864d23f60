import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import effgsa as eg

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def nominal_space():
    return eg.nominal_space()


@pytest.fixture(scope="session")
def map_grid():
    return eg.qoi.default_grid()


@pytest.fixture(scope="session")
def map_model(map_grid):
    return eg.EcmModel(eg.EcmParameters(), map_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
