import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pdm_bench.logmodel import EventLog

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_log(rng, horizon=None, ft=None, n=None, target=0) -> EventLog:
    horizon = int(rng.integers(1, 120)) if horizon is None else horizon
    ft = int(rng.integers(1, 12)) if ft is None else ft
    n = int(rng.integers(0, 80)) if n is None else n
    days = rng.integers(0, horizon, n)
    types = rng.integers(0, ft, n)
    return EventLog(days, types, horizon, ft, min(target, ft - 1))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
