"""Complex dense linear algebra helpers for Hermitian scatter matrices.

Matrices are plain ``numpy.ndarray`` values; Hermitian structure is kept by
symmetrizing after every operation that should preserve it, and
positive-definiteness is checked where the caller requires it.  Also provides
the structural objects the asymptotic-covariance formulas are written in:
the column-stacking ``vec`` operator, Kronecker products, the commutation
permutation, and the 2m x 2m real embedding of a Hermitian matrix.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "NumericalError",
    "NotPositiveDefinite",
    "SingularMatrix",
    "vec",
    "unvec",
    "kron",
    "commutation_permutation",
    "commutation_apply",
    "commutation_dense",
    "apply_commutation_right",
    "symmetrize",
    "is_hermitian",
    "herm_eig",
    "herm_sqrt",
    "herm_inv",
    "real_embedding",
    "real_embedding_inverse",
]

DEFAULT_COND_CAP = 1e12


class NumericalError(Exception):
    """Base class for numerical failures surfaced to callers (CLI exit 3)."""


class NotPositiveDefinite(NumericalError):
    """A matrix required to be positive-definite is not."""


class SingularMatrix(NumericalError):
    """Condition number beyond the configured cap."""


def vec(a: np.ndarray) -> np.ndarray:
    """Stack the columns of a matrix into a single vector."""
    a = np.asarray(a)
    return a.reshape(-1, order="F")


def unvec(x: np.ndarray, m: int, n: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec` for an m x n matrix (square if n omitted)."""
    if n is None:
        n = m
    x = np.asarray(x)
    if x.size != m * n:
        raise ValueError(f"cannot reshape length-{x.size} vector to {m}x{n}")
    return x.reshape(m, n, order="F")


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; satisfies vec(A X B) = (B^T kron A) vec(X)."""
    return np.kron(a, b)


def commutation_permutation(m: int, n: int | None = None) -> np.ndarray:
    """Index map ``p`` with (K x)[k] = x[p[k]], i.e. K vec(A) = vec(A^T).

    Stored as a permutation, never densified outside tests: entry
    k = i + j*m of vec(A^T) is A[j, i], which sits at j + i*n in vec(A).
    """
    if n is None:
        n = m
    k = np.arange(m * n)
    i, j = k % m, k // m
    return j + i * n


def commutation_apply(x: np.ndarray, m: int, n: int | None = None) -> np.ndarray:
    """Apply the commutation permutation: vec(A) -> vec(A^T)."""
    x = np.asarray(x)
    if n is None:
        n = m
    if x.shape[-1] != m * n:
        raise ValueError(f"expected length {m * n}, got {x.shape[-1]}")
    return x[..., commutation_permutation(m, n)]

def commutation_dense(m: int, n: int | None = None) -> np.ndarray:
    """Dense commutation matrix (test/assembly use only)."""
    if n is None:
        n = m
    p = commutation_permutation(m, n)
    k = np.zeros((m * n, m * n))
    k[np.arange(m * n), p] = 1.0
    return k


def apply_commutation_right(s: np.ndarray, m: int) -> np.ndarray:
    """Column permutation S -> S K for square-m commutation (K symmetric)."""
    return s[:, commutation_permutation(m)]


def symmetrize(a: np.ndarray) -> np.ndarray:
    """(A + A^H)/2 — kills the floating-point drift of Hermitian updates."""
    return 0.5 * (a + a.conj().T)


def is_hermitian(a: np.ndarray, tol: float = 1e-12) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = max(np.linalg.norm(a), 1.0)
    return bool(np.linalg.norm(a - a.conj().T) <= tol * scale)


def herm_eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, unitary eigenvector matrix) with
    A V = V diag(w).  Raises :class:`NumericalError` if the underlying
    iteration fails to converge.
    """
    try:
        w, v = np.linalg.eigh(np.asarray(a))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    return w, v


def herm_sqrt(a: np.ndarray) -> np.ndarray:
    """Hermitian pd square root S with S S = A."""
    w, v = herm_eig(a)
    if w[0] <= 0.0:
        raise NotPositiveDefinite(f"matrix square root needs pd input (min eigenvalue {w[0]:.3e})")
    return symmetrize((v * np.sqrt(w)) @ v.conj().T)


def herm_inv(a: np.ndarray, cond_cap: float = DEFAULT_COND_CAP) -> np.ndarray:
    """Inverse of a Hermitian pd matrix, with a condition-number guard."""
    w, v = herm_eig(a)
    if w[0] <= 0.0:
        raise NotPositiveDefinite(f"inverse needs pd input (min eigenvalue {w[0]:.3e})")
    if w[-1] > cond_cap * w[0]:
        raise SingularMatrix(f"condition number {w[-1] / w[0]:.3e} exceeds cap {cond_cap:.1e}")
    return symmetrize((v / w) @ v.conj().T)


def real_embedding(a: np.ndarray) -> np.ndarray:
    """Map a Hermitian m x m matrix to its 2m x 2m real symmetric image.

    f(A) = (1/2) [[Re A, -Im A], [Im A, Re A]].  Useful identities, all
    exercised in tests: f(A^{-1}) = (1/4) f(A)^{-1}, and
    z^H A^{-1} z = (1/2) u^T f(A)^{-1} u with u = (Re z; Im z).
    """
    a = np.asarray(a)
    re, im = a.real, a.imag
    return 0.5 * np.block([[re, -im], [im, re]])


def real_embedding_inverse(f: np.ndarray) -> np.ndarray:
    """Recover A from f(A): A = g^H f(A) g with g = [[I], [-jI]]."""
    f = np.asarray(f)
    m = f.shape[0] // 2
    g = np.vstack([np.eye(m), -1j * np.eye(m)])
    return g.conj().T @ f @ g
