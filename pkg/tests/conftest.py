import numpy as np
import pytest

from sigmaharm import circle, torus2
from sigmaharm.extension import make_config


@pytest.fixture(scope="session")
def circle_2pi():
    return circle(2.0 * np.pi)


@pytest.fixture(scope="session")
def torus_2pi():
    return torus2(2.0 * np.pi, 2.0 * np.pi)


@pytest.fixture(scope="session")
def cfg_half(circle_2pi):
    """sigma = 1/2 on a 128-point circle; shared by many tests."""
    return make_config(circle_2pi, 0.5, 128)


@pytest.fixture(scope="session")
def cfg_by_sigma(circle_2pi):
    cache = {}

    def get(sigma, n=128):
        key = (sigma, n)
        if key not in cache:
            cache[key] = make_config(circle_2pi, sigma, n)
        return cache[key]

    return get
