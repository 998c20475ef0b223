import numpy as np
import pytest

from oamlink.quantum import DensityMatrix


def random_density(rng, dim, rank=None):
    """Random mixed state from a Ginibre matrix: rho = G G^dag / tr."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return DensityMatrix.from_array(m / np.trace(m).real)


def random_ket_amplitudes(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
