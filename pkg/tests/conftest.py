import numpy as np
import pytest

from scenarios import make_scenario


@pytest.fixture
def scenario():
    return make_scenario()


@pytest.fixture
def rng():
    return np.random.default_rng(20250809)
