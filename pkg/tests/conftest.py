import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from opkant.ifs import resolve_ifs

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def cantor():
    return resolve_ifs("cantor")


@pytest.fixture(scope="session")
def dyadic():
    return resolve_ifs("dyadic")


@pytest.fixture(scope="session")
def sierpinski():
    return resolve_ifs("sierpinski")


@pytest.fixture(scope="session")
def overlap():
    return resolve_ifs("overlap")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
