import numpy as np
import pytest

from qjasim.model import CostFunction, build_random_potential


@pytest.fixture
def two_level():
    return CostFunction.chain([0.0, 1.0])


@pytest.fixture
def chain50():
    return build_random_potential(50, seed=0)


def random_instances(count, n_max, seed=1234, n_min=2):
    rng = np.random.default_rng(seed)
    return [
        build_random_potential(int(rng.integers(n_min, n_max + 1)), int(rng.integers(2**31)))
        for _ in range(count)
    ]
