import numpy as np
import pytest

from mteband import gaussian_kernel, quartic_kernel


@pytest.fixture(scope="session")
def gauss():
    return gaussian_kernel()


@pytest.fixture(scope="session")
def quartic():
    return quartic_kernel()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
