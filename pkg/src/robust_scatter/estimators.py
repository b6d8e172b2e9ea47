"""Scatter-matrix estimators: SCM, complex Huber M-estimator, Tyler.

The M-estimators solve

    M = (1/N) sum_i u(z_i^H M^{-1} z_i) z_i z_i^H

by plain fixed-point iteration.  Weight functions are bundled as
:class:`WeightFunction` triples (u, psi, psi'); u must satisfy the usual
Maronna admissibility conditions (non-negative, non-increasing, continuous,
with sup psi > m), which :meth:`WeightFunction.validate` spot-checks on a
grid.

Estimator identifiers used by the CLI and experiment configs:
``"scm"``, ``"huber:<q>"``, ``"tyler"``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from . import linalg
from ._kernels import quad_forms, weighted_scatter
from .distributions import chi2_cdf, chi2_quantile

__all__ = [
    "ConvergenceError",
    "DegenerateData",
    "WeightFunction",
    "ScatterEstimate",
    "scm_weight",
    "huber_tuning",
    "huber_weight",
    "scm",
    "m_estimate_fixed_point",
    "tyler_estimate",
    "estimate",
    "parse_estimator_id",
]

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 500


class ConvergenceError(linalg.NumericalError):
    """Fixed-point iteration did not meet its tolerance.

    Carries the last iterate and the last relative change for diagnosis.
    """

    def __init__(self, message, last=None, residual=None):
        super().__init__(message)
        self.last = last
        self.residual = residual


class DegenerateData(linalg.NumericalError):
    """Sample set cannot support an M-estimate (too few/rank-deficient rows)."""


@dataclass(frozen=True)
class WeightFunction:
    """Weight triple (u, psi, psi') defining an M-estimator.

    ``u`` maps squared Mahalanobis distances to non-negative weights;
    ``psi(s) = s u(s)``; ``psi_prime`` is its derivative (piecewise for
    Huber).  All three are vectorized over numpy arrays.  ``nominal_sigma``
    is the consistency scale the tuning targets (1.0 for the SCM and for
    Huber tuned against Gaussian data).
    """

    estimator_id: str
    u: Callable
    psi: Callable
    psi_prime: Callable
    params: dict = field(default_factory=dict)
    psi_sup: float = np.inf
    nominal_sigma: float = 1.0

    def validate(self, m: int, grid: np.ndarray | None = None) -> None:
        """Spot-check the admissibility conditions for dimension m."""
        if grid is None:
            grid = np.linspace(0.0, 50.0 * max(m, 1), 2001)
        u = np.asarray(self.u(grid), dtype=float)
        psi = np.asarray(self.psi(grid), dtype=float)
        if np.any(u < 0):
            raise ValueError(f"{self.estimator_id}: weight function takes negative values")
        if np.any(np.diff(u) > 1e-12):
            raise ValueError(f"{self.estimator_id}: weight function is not non-increasing")
        if np.any(np.diff(psi) < -1e-12):
            raise ValueError(f"{self.estimator_id}: psi is not non-decreasing")
        if not m < self.psi_sup:
            raise ValueError(
                f"{self.estimator_id}: sup psi = {self.psi_sup:.4g} must exceed the dimension {m}"
            )


@dataclass(frozen=True)
class ScatterEstimate:
    """A scatter estimate plus solver diagnostics.

    ``sigma`` is the nominal consistency factor linking the estimand to the
    true scatter (None for Tyler, whose scale is fixed by normalization);
    ``deltas`` records the relative Frobenius change per iteration.
    """

    matrix: np.ndarray
    iterations: int
    residual: float
    estimator_id: str
    sigma: float | None = 1.0
    pd: bool = True
    deltas: np.ndarray = field(default_factory=lambda: np.zeros(0))


def scm_weight() -> WeightFunction:
    """Constant weight u = 1: the fixed point is the sample covariance."""
    return WeightFunction(
        estimator_id="scm",
        u=lambda s: np.ones_like(np.asarray(s, dtype=float)),
        psi=lambda s: np.asarray(s, dtype=float),
        psi_prime=lambda s: np.ones_like(np.asarray(s, dtype=float)),
        psi_sup=np.inf,
    )


def huber_tuning(q: float, m: int) -> tuple[float, float]:
    """Huber tuning constants (k^2, beta) for clipping fraction q.

    k^2 is set so that a fraction q of Gaussian samples falls below the
    clipping threshold, and beta makes the estimator consistent for the
    covariance matrix (scale factor one) under Gaussian data:

        q = F_{2m}(2 k^2),   beta = F_{2m+2}(2 k^2) + k^2 (1 - q) / m,

    with F_k the chi-square CDF.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"huber clipping fraction q must lie in (0, 1), got {q}")
    k2 = 0.5 * chi2_quantile(q, 2 * m)
    beta = chi2_cdf(2.0 * k2, 2 * m + 2) + k2 * (1.0 - q) / m
    return k2, beta


def huber_weight(q: float, m: int, *, k2: float | None = None, beta: float | None = None) -> WeightFunction:
    """Complex Huber weight u(s) = (1/beta) min(1, k^2/s).

    Samples with squared Mahalanobis distance below k^2 are kept as in the
    SCM; larger ones are normalized as outliers.  psi' at the kink takes the
    left value 1/beta (a measure-zero choice).  The k2/beta overrides exist
    for negative-control selftests; normal use derives both from q.
    """
    k2_tuned, beta_tuned = huber_tuning(q, m)
    k2 = k2_tuned if k2 is None else k2
    beta = beta_tuned if beta is None else beta
    inv_beta = 1.0 / beta

    def u(s):
        s = np.asarray(s, dtype=float)
        return inv_beta * np.where(s <= k2, 1.0, k2 / np.maximum(s, k2))

    def psi(s):
        return inv_beta * np.minimum(np.asarray(s, dtype=float), k2)

    def psi_prime(s):
        return inv_beta * (np.asarray(s, dtype=float) <= k2)

    w = WeightFunction(
        estimator_id=f"huber:{q:g}",
        u=u,
        psi=psi,
        psi_prime=psi_prime,
        params={"q": q, "k2": k2, "beta": beta},
        psi_sup=k2 * inv_beta,
    )
    w.validate(m)
    return w


def _as_samples(samples: np.ndarray) -> np.ndarray:
    z = np.ascontiguousarray(np.asarray(samples, dtype=np.complex128))
    if z.ndim != 2:
        raise ValueError("samples must be a 2-D array, one row per sample")
    return z


def scm(samples: np.ndarray) -> ScatterEstimate:
    """Sample covariance matrix (1/N) sum_i z_i z_i^H."""
    z = _as_samples(samples)
    n, m = z.shape
    if n < 1:
        raise ValueError("need at least one sample")
    mat = weighted_scatter(z, np.ones(n))
    pd = n >= m
    if not pd:
        warnings.warn(f"SCM from {n} < {m} samples is rank-deficient", stacklevel=2)
    else:
        pd = bool(np.linalg.eigvalsh(mat)[0] > 0.0)
    return ScatterEstimate(matrix=mat, iterations=0, residual=0.0, estimator_id="scm", sigma=1.0, pd=pd)


def _check_rank(z: np.ndarray) -> None:
    # directional rank: sample magnitudes are irrelevant to the existence
    # conditions (texture spans hundreds of orders under impulsive models),
    # so the span test runs on unit-normalized rows
    n, m = z.shape
    if n <= m:
        raise DegenerateData(f"need more samples than the dimension ({n} <= {m})")
    norms = np.linalg.norm(z, axis=1)
    directions = z[norms > 0.0] / norms[norms > 0.0, None]
    if directions.shape[0] <= m or np.linalg.matrix_rank(directions) < m:
        raise DegenerateData("samples lie in a proper subspace; the estimating equation is degenerate")


def _power_scaled_identity(z: np.ndarray) -> np.ndarray:
    n, m = z.shape
    return (np.einsum("ij,ij->", z, z.conj()).real / (n * m)) * np.eye(m, dtype=complex)


def _radial_rescale(w: WeightFunction, s: np.ndarray, m: int) -> float:
    """Scale factor kappa placing the iterate on the radial constraint.

    Solves (1/(n m)) sum_i psi(s_i / kappa) = 1, which every fixed point of
    the estimating equation satisfies (take the trace of the equation).
    Rescaling each iterate onto this manifold removes the overall-scale
    mode, the slow direction when most samples sit in a clipped weight
    branch (heavy-tailed data); the fixed points themselves are unchanged.
    """

    def excess(log_kappa):
        return float(np.mean(w.psi(s * np.exp(-log_kappa)))) / m - 1.0

    lo, hi = -40.0, 40.0
    f_lo, f_hi = excess(lo), excess(hi)
    if not (f_lo > 0.0 > f_hi):  # flat psi (Tyler-like weight): nothing to pin down
        return 1.0
    return float(np.exp(optimize.brentq(excess, lo, hi, xtol=1e-13)))


def m_estimate_fixed_point(
    samples: np.ndarray,
    w: WeightFunction,
    init: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ScatterEstimate:
    """Solve the M-estimating equation by fixed-point iteration.

    Iterates M <- (1/N) sum_i u(z_i^H M^{-1} z_i) z_i z_i^H from a
    power-scaled identity (or ``init``), rescaling each iterate onto the
    radial constraint (see :func:`_radial_rescale`), until the relative
    Frobenius change drops below ``tol``; the returned estimate additionally
    satisfies the estimating equation with relative residual below 10*tol.
    """
    z = _as_samples(samples)
    _check_rank(z)
    m = z.shape[1]
    mat = _power_scaled_identity(z) if init is None else linalg.symmetrize(np.asarray(init, dtype=complex))

    deltas = []
    converged = False
    s = quad_forms(z, linalg.herm_inv(mat))
    for _ in range(max_iter):
        nxt = weighted_scatter(z, w.u(s))
        s = quad_forms(z, linalg.herm_inv(nxt))
        kappa = _radial_rescale(w, s, m)
        if kappa != 1.0:
            nxt = kappa * nxt
            s = s / kappa
        delta = np.linalg.norm(nxt - mat) / np.linalg.norm(mat)
        deltas.append(delta)
        mat = nxt
        if delta < tol:
            converged = True
            break

    rhs = weighted_scatter(z, w.u(s))
    residual = float(np.linalg.norm(mat - rhs) / np.linalg.norm(mat))
    if not converged or residual >= 10.0 * tol:
        raise ConvergenceError(
            f"{w.estimator_id}: no fixed point within {max_iter} iterations "
            f"(last change {deltas[-1]:.3e}, residual {residual:.3e})",
            last=mat,
            residual=residual,
        )
    return ScatterEstimate(
        matrix=mat,
        iterations=len(deltas),
        residual=residual,
        estimator_id=w.estimator_id,
        sigma=w.nominal_sigma,
        deltas=np.asarray(deltas),
    )


def tyler_estimate(
    samples: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    normalization: str = "trace",
) -> ScatterEstimate:
    """Tyler's scale-invariant fixed point M = (m/N) sum_i z_i z_i^H / (z_i^H M^{-1} z_i).

    The fixed point is defined up to scale, so every iterate is renormalized
    (trace(M) = m by default, det(M) = 1 with ``normalization="det"``);
    rescaling any sample leaves the estimate unchanged.
    """
    if normalization not in ("trace", "det"):
        raise ValueError(f"unknown normalization {normalization!r}")
    z = _as_samples(samples)
    _check_rank(z)
    n, m = z.shape
    norms = np.einsum("ij,ij->i", z, z.conj()).real
    if np.any(norms == 0.0):
        raise DegenerateData("Tyler's estimator is undefined for zero samples")

    def normalize(a):
        if normalization == "trace":
            return a * (m / np.trace(a).real)
        return a / (np.linalg.det(a).real ** (1.0 / m))

    mat = np.eye(m, dtype=complex)
    deltas = []
    converged = False
    for _ in range(max_iter):
        s = quad_forms(z, linalg.herm_inv(mat))
        nxt = normalize(weighted_scatter(z, m / s))
        delta = np.linalg.norm(nxt - mat) / np.linalg.norm(mat)
        deltas.append(delta)
        mat = nxt
        if delta < tol:
            converged = True
            break

    rhs = normalize(weighted_scatter(z, m / quad_forms(z, linalg.herm_inv(mat))))
    residual = float(np.linalg.norm(mat - rhs) / np.linalg.norm(mat))
    if not converged or residual >= 10.0 * tol:
        raise ConvergenceError(
            f"tyler: no fixed point within {max_iter} iterations (residual {residual:.3e})",
            last=mat,
            residual=residual,
        )
    return ScatterEstimate(
        matrix=mat,
        iterations=len(deltas),
        residual=residual,
        estimator_id="tyler",
        sigma=None,
        deltas=np.asarray(deltas),
    )


def parse_estimator_id(estimator_id: str, m: int) -> WeightFunction | None:
    """Weight function for an estimator string; None marks Tyler (own solver)."""
    s = estimator_id.strip().lower()
    if s == "scm":
        return scm_weight()
    if s == "tyler":
        return None
    if s.startswith("huber:"):
        return huber_weight(float(s.split(":", 1)[1]), m)
    raise ValueError(f"unknown estimator id {estimator_id!r}")


def estimate(
    samples: np.ndarray,
    estimator_id: str,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ScatterEstimate:
    """Run the estimator named by ``estimator_id`` on row-stacked samples."""
    z = _as_samples(samples)
    if estimator_id.strip().lower() == "scm":
        return scm(z)
    w = parse_estimator_id(estimator_id, z.shape[1])
    if w is None:
        return tyler_estimate(z, tol=tol, max_iter=max_iter)
    return m_estimate_fixed_point(z, w, tol=tol, max_iter=max_iter)
