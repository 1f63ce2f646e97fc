import numpy as np
import pytest

from weldfactor import FactorizeOptions, FixtureSpec, factorize, make_fixture


@pytest.fixture(scope="session")
def fixture2():
    return make_fixture(FixtureSpec(n=2, seed=7))


@pytest.fixture(scope="session")
def fixture3():
    return make_fixture(FixtureSpec(n=3, seed=11))


@pytest.fixture(scope="session")
def result2(fixture2):
    return factorize(fixture2.problem, FactorizeOptions(order=64))


@pytest.fixture(scope="session")
def result3(fixture3):
    return factorize(fixture3.problem, FactorizeOptions(order=64))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
