import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kincoach.skeleton import resolve_config, resolve_reference

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def squat():
    return resolve_config("squat")


@pytest.fixture(scope="session")
def squat_ref(squat):
    return resolve_reference(squat)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
