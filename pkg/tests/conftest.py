import numpy as np
import pytest

from ymspec.algebra import build_algebra
from ymspec.lattice import LatticeSpec
from ymspec.spectrum import ModelSpec, assemble_hamiltonian


@pytest.fixture(scope="session")
def su2():
    return build_algebra("su2")


@pytest.fixture(scope="session")
def su3():
    return build_algebra("su3")


@pytest.fixture(scope="session")
def so4():
    return build_algebra("so4")


@pytest.fixture(scope="session")
def lat8():
    return LatticeSpec(n=8, spacing=0.7)


@pytest.fixture(scope="session")
def lat4():
    return LatticeSpec(n=4, spacing=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240801)


@pytest.fixture(scope="session")
def su2_model_nmax8():
    return ModelSpec(algebra="su2", N_max=8, n_max=5)


@pytest.fixture(scope="session")
def su2_hamiltonian_nmax8(su2_model_nmax8):
    return assemble_hamiltonian(su2_model_nmax8)


@pytest.fixture(scope="session")
def su2_hamiltonian_nmax10(su2_model_nmax8):
    return assemble_hamiltonian(su2_model_nmax8, N_max=10)
