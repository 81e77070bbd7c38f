import numpy as np
import pytest

from convens.fem import FemContext
from convens.mesh import build_structured_mesh
from convens.stepper import Operators


@pytest.fixture(scope="session")
def mesh8():
    return build_structured_mesh(8)


@pytest.fixture(scope="session")
def ctx8(mesh8):
    return FemContext(mesh8)


@pytest.fixture(scope="session")
def ops8():
    return Operators(build_structured_mesh(8))


@pytest.fixture(scope="session")
def ops8_all():
    return Operators(build_structured_mesh(8), temp_dirichlet_policy="all")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
