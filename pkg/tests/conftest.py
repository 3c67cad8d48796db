import numpy as np
import pytest

from lobphase.dist import ArrivalSpec, uniform_dist


@pytest.fixture(scope="session")
def uniform_spec() -> ArrivalSpec:
    return ArrivalSpec(uniform_dist(), uniform_dist())


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20240917)
