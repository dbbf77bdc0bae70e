import math

import numpy as np
import pytest

from znqed.model import ModelParams, build_basis, build_hamiltonian

G_PAPER = math.sqrt(3 / math.pi)
UNIT3 = math.sqrt(2 * math.pi / 3)


@pytest.fixture
def fig3():
    params = ModelParams(n=3, N=4, m=0.5, g=G_PAPER)
    basis = build_basis(params)
    return params, basis, build_hamiltonian(params, basis)


@pytest.fixture
def rng():
    return np.random.default_rng(20260516)


def random_state(basis, rng):
    from znqed.model import StateVector

    a = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    return StateVector.from_array(a / np.linalg.norm(a), basis.tag)
