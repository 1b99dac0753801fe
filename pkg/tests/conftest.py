import numpy as np
import pytest

from refgov import ConstraintSet, make_plant
from refgov.kernels import warmup


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    # Compile (or load from cache) every jitted kernel once, so no test
    # pays for JIT inside a timed section.
    warmup()


@pytest.fixture(scope="session")
def surrogate():
    return make_plant("surrogate-fc")


@pytest.fixture
def box():
    return ConstraintSet(-0.9, 0.9, anchor=0.0)


@pytest.fixture
def origin():
    return np.zeros(3)
