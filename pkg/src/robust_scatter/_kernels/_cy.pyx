# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops of the fixed-point scatter iterations.

Same contracts as ``_py``; accumulation runs in sample order, upper
triangle only, so results are reproducible and exactly Hermitian.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def quad_forms(const double complex[:, ::1] z, const double complex[:, ::1] minv):
    """Real quadratic forms s[i] = Re(z_i^H A z_i) for Hermitian A."""
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t m = z.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] s = out
    cdef Py_ssize_t i, a, b
    cdef double complex acc, za
    with nogil:
        for i in range(n):
            acc = 0
            for a in range(m):
                za = z[i, a].conjugate()
                for b in range(m):
                    acc = acc + za * minv[a, b] * z[i, b]
            s[i] = acc.real
    return out


def weighted_scatter(const double complex[:, ::1] z, const double[::1] w):
    """Weighted sample scatter (1/n) sum_i w_i z_i z_i^H."""
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t m = z.shape[1]
    out = np.zeros((m, m), dtype=np.complex128)
    cdef double complex[:, ::1] acc = out
    cdef Py_ssize_t i, a, b
    cdef double complex wza
    with nogil:
        for i in range(n):
            for a in range(m):
                wza = w[i] * z[i, a]
                for b in range(a, m):
                    acc[a, b] = acc[a, b] + wza * z[i, b].conjugate()
    cdef double inv_n = 1.0 / n
    with nogil:
        for a in range(m):
            for b in range(a, m):
                acc[a, b] = acc[a, b] * inv_n
                if b > a:
                    acc[b, a] = acc[a, b].conjugate()
                else:
                    acc[a, a] = acc[a, a].real
    return out
