import pytest

from phaseintegral.examples import example_problem
from phaseintegral.problem import load_problem, split_R


def _reduced(name):
    spec, lam, a = load_problem(example_problem(name))
    return split_R(spec, lam, a)


@pytest.fixture(scope="session")
def fex1():
    return _reduced("fulling-pos")


@pytest.fixture(scope="session")
def fex3():
    return _reduced("fulling-neg")


@pytest.fixture(scope="session")
def fex4():
    return _reduced("nonhermitian")


@pytest.fixture(scope="session")
def bec():
    return _reduced("bec-vortex")


@pytest.fixture(scope="session")
def scalar_quadratic():
    return _reduced("scalar-quadratic")
