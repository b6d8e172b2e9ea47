"""Parity between the compiled kernels and the numpy fallback."""

import numpy as np
import pytest

from robust_scatter import _kernels
from robust_scatter.distributions import make_stream

from conftest import random_complex


def test_backend_reported():
    assert _kernels.BACKEND in ("cython", "python")
    assert "python" in _kernels.backends()


@pytest.mark.parametrize("n,m", [(1, 2), (17, 3), (500, 2), (256, 8)])
def test_backend_parity(n, m):
    rng = make_stream(99, (n, m))
    z = np.ascontiguousarray(random_complex(rng, n, m))
    x = random_complex(rng, m, m)
    minv = np.ascontiguousarray(x @ x.conj().T + np.eye(m))
    w = np.abs(rng.standard_normal(n)) + 0.1

    impls = _kernels.backends()
    ref_q = impls["python"].quad_forms(z, minv)
    ref_s = impls["python"].weighted_scatter(z, w)
    for name, impl in impls.items():
        q = impl.quad_forms(z, minv)
        s = impl.weighted_scatter(z, w)
        assert np.allclose(q, ref_q, rtol=1e-12, atol=1e-12), name
        assert np.allclose(s, ref_s, rtol=1e-12, atol=1e-12), name
        assert np.array_equal(s, s.conj().T), f"{name}: weighted scatter must be exactly Hermitian"


def test_quad_forms_matches_direct():
    rng = make_stream(100)
    z = np.ascontiguousarray(random_complex(rng, 40, 3))
    x = random_complex(rng, 3, 3)
    minv = np.ascontiguousarray(x @ x.conj().T + np.eye(3))
    expected = np.array([(v.conj() @ minv @ v).real for v in z])
    for impl in _kernels.backends().values():
        assert np.allclose(impl.quad_forms(z, minv), expected, rtol=1e-12)


def test_weighted_scatter_matches_direct():
    rng = make_stream(101)
    z = np.ascontiguousarray(random_complex(rng, 25, 4))
    w = rng.uniform(0.1, 2.0, size=25)
    expected = sum(wi * np.outer(v, v.conj()) for wi, v in zip(w, z)) / 25
    for impl in _kernels.backends().values():
        assert np.allclose(impl.weighted_scatter(z, w), expected, rtol=1e-12)
