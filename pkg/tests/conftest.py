import numpy as np
import pytest

from icocapsid.energy import assemble
from icocapsid.geometry import build_icosahedron

DEFAULT_K_S = 0.25
DEFAULT_K_B = 1.7
DEFAULT_EDGE = 3.0


@pytest.fixture(scope="session")
def geom():
    return build_icosahedron(DEFAULT_EDGE)


@pytest.fixture(scope="session")
def model(geom):
    return assemble(geom, DEFAULT_K_S, DEFAULT_K_B)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
