import numpy as np
import pytest

from fano_continuity.radial_geometry import ModelSpec


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def hirzebruch():
    return ModelSpec.hirzebruch(a=1, kappa=1.0)


@pytest.fixture(scope="session")
def product():
    return ModelSpec.product(kappa=1.0)
