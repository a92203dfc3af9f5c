import numpy as np
import pytest

from excitonchain import EnvironmentParams, HamiltonianParams


@pytest.fixture
def default_ham():
    return HamiltonianParams()


@pytest.fixture
def default_env():
    return EnvironmentParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)
