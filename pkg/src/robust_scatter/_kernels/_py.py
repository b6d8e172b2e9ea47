"""Pure-numpy kernels, the fallback when the compiled extension is absent."""

import numpy as np


def quad_forms(z, minv):
    """Real quadratic forms s[i] = Re(z_i^H A z_i) for Hermitian A."""
    return np.einsum("ia,ab,ib->i", z.conj(), minv, z, optimize=True).real


def weighted_scatter(z, w):
    """Weighted sample scatter (1/n) sum_i w_i z_i z_i^H."""
    s = (z.T * w) @ z.conj()
    s = 0.5 * (s + s.conj().T)
    return s / z.shape[0]
