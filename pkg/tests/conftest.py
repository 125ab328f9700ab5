import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lowdim_maxcut.embedding import UnitEmbedding

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def pentagon_embedding():
    ang = 4 * np.pi * np.arange(5) / 5
    return UnitEmbedding(np.c_[np.cos(ang), np.sin(ang)])


@pytest.fixture
def pentagon():
    return pentagon_embedding()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
