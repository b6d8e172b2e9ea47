import numpy as np
import pytest

from robust_scatter.distributions import make_stream


@pytest.fixture
def rng():
    return make_stream(20240601)


def random_hermitian(rng, m, pd=True):
    """Random Hermitian test matrix, shifted to be comfortably pd if asked."""
    x = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    a = 0.5 * (x + x.conj().T)
    if pd:
        a = a @ a.conj().T / m + np.eye(m)
        a = 0.5 * (a + a.conj().T)
    return a


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
