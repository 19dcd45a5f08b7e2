import pytest

from mdfilter import macro_qubit, macro_qubit_mixture


@pytest.fixture(scope="session")
def phi_187():
    return macro_qubit(1.87, "phi", 1e-9)


@pytest.fixture(scope="session")
def mixture_187():
    return macro_qubit_mixture(1.87, 1e-9)
