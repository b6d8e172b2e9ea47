"""Asymptotic covariance theory for complex M-estimators of scatter.

Quantities computed here, for an admissible weight function and an
elliptical model:

* the consistency scale ``sigma`` solving E[psi(sigma |t|^2)] = m, which
  links the M-functional to the true scatter via M = Lambda / sigma;
* the scalar coefficients (sigma1, sigma2) parameterizing the asymptotic
  covariance of the vectorized estimate,

      Sigma = sigma1 M^T kron M + sigma2 vec(M) vec(M)^H,
      Omega = Sigma K                       (K the commutation matrix),

  in the complex case, together with their real-case analogues (used as a
  cross-validation path through the real embedding);
* the variance transfer to any functional H with H(alpha M) = H(M): only
  the sigma1 term survives,

      Sigma_H = sigma1 H'(M) (M^T kron M) H'(M)^H,

  which is why scale-invariant statistics pay the same variance penalty
  regardless of sigma2.

Expectations integrate exactly against the chi-square radial density for
Gaussian models and fall back to fixed-seed Monte-Carlo averages otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import linalg
from .distributions import RadialLaw, make_stream, radial_law
from .estimators import WeightFunction, parse_estimator_id

__all__ = [
    "AsymptoticVariance",
    "CovariancePair",
    "NoRootError",
    "HomogeneityError",
    "solve_sigma",
    "complex_variance_coeffs",
    "real_variance_coeffs",
    "variance_coeffs",
    "scatter_asymptotic_covariance",
    "wishart_asymptotic_covariance",
    "functional_asymptotic_variance",
    "hermitian_jacobian",
]

SIGMA_BRACKET = (1e-6, 1e6)
MC_DRAWS = 1_000_000
MC_SEED = 0x5EED


class NoRootError(linalg.NumericalError):
    """The consistency-scale equation has no root in the search bracket."""


class HomogeneityError(linalg.NumericalError):
    """Jacobian is not orthogonal to vec(M): the functional is not degree-0."""


@dataclass(frozen=True)
class AsymptoticVariance:
    """(sigma, sigma1, sigma2) bundle for an (estimator, model, m) triple."""

    sigma: float
    sigma1: float
    sigma2: float
    a1: float
    a2: float
    m: int
    estimator_id: str = ""
    model_id: str = ""


@dataclass(frozen=True)
class CovariancePair:
    """Covariance and pseudo-covariance of the vectorized estimation error."""

    Sigma: np.ndarray
    Omega: np.ndarray


class _Expectation:
    """E[fn(|t|^2)] backend: exact quadrature or fixed-seed Monte-Carlo."""

    def __init__(self, radial: RadialLaw, method: str = "auto", draws: int = MC_DRAWS, seed: int = MC_SEED):
        if method not in ("auto", "quadrature", "mc"):
            raise ValueError(f"unknown expectation method {method!r}")
        if method == "quadrature" and not radial.exact:
            raise ValueError(f"no quadrature backend for model kind {radial.kind!r}")
        self.radial = radial
        self.exact = radial.exact and method != "mc"
        self.samples = None if self.exact else radial.sample(draws, make_stream(seed))

    def __call__(self, fn, kinks=()):
        if self.exact:
            return self.radial.expect(fn, kinks=kinks)
        return float(np.mean(fn(self.samples)))

    def stderr(self, fn):
        if self.exact:
            return 0.0
        vals = fn(self.samples)
        return float(np.std(vals) / np.sqrt(vals.size))


def _weight_kinks(w: WeightFunction, sigma: float):
    k2 = w.params.get("k2")
    return () if k2 is None else (k2 / sigma,)


def solve_sigma(
    w: WeightFunction,
    m: int,
    radial: RadialLaw,
    method: str = "auto",
    expectation: _Expectation | None = None,
) -> float:
    """Consistency scale: the root of E[psi(sigma |t|^2)] = m.

    psi non-decreasing makes the equation monotone in sigma; the root is
    bracketed in [1e-6, 1e6] and refined to machine precision.  Gaussian
    radial laws use exact quadrature (residual < 1e-8); Monte-Carlo models
    resolve the scale only to the averaging error (~1e-3).
    """
    expect = expectation or _Expectation(radial, method)

    def excess(sigma):
        return expect(lambda s: w.psi(sigma * s), kinks=_weight_kinks(w, sigma)) - m

    lo, hi = SIGMA_BRACKET
    flo, fhi = excess(lo), excess(hi)
    if flo >= 0.0 or fhi <= 0.0:
        raise NoRootError(
            f"{w.estimator_id}: E[psi(sigma |t|^2)] - {m} does not change sign on "
            f"[{lo:g}, {hi:g}] (values {flo:.3g}, {fhi:.3g}); the weight function is "
            f"inadmissible for m={m} or the scale lies outside the bracket (extreme radial law)"
        )
    sigma = optimize.brentq(excess, lo, hi, xtol=1e-14, rtol=8.9e-16)
    if expect.exact and abs(excess(sigma)) > 1e-8:
        raise NoRootError(f"{w.estimator_id}: consistency-scale residual {excess(sigma):.3e} too large")
    return float(sigma)


def _coeff_expectations(w, sigma, expect):
    kinks = _weight_kinks(w, sigma)
    e_psi2 = expect(lambda s: w.psi(sigma * s) ** 2, kinks=kinks)
    e_spsip = expect(lambda s: sigma * s * w.psi_prime(sigma * s), kinks=kinks)
    return e_psi2, e_spsip


def complex_variance_coeffs(
    w: WeightFunction,
    m: int,
    radial: RadialLaw | None = None,
    model_id: str = "gaussian",
    method: str = "auto",
) -> AsymptoticVariance:
    """Complex-case scalars (sigma, sigma1, sigma2) for an M-estimator.

    With a1 = E[psi^2(sigma |t|^2)] / (m (m+1)) and
    a2 = E[sigma |t|^2 psi'(sigma |t|^2)] / m:

        sigma1 = a1 (m+1)^2 / (a2 + m)^2,
        sigma2 = a2^{-2} [ (a1 - 1) - 2 a1 (a2 - 1) (2m + (2m+4) a2) / (2 a2 + 2m)^2 ].
    """
    if radial is None:
        radial = radial_law(model_id, m)
    expect = _Expectation(radial, method)
    sigma = solve_sigma(w, m, radial, expectation=expect)
    e_psi2, e_spsip = _coeff_expectations(w, sigma, expect)
    a1 = e_psi2 / (m * (m + 1))
    a2 = e_spsip / m
    sigma1 = a1 * (m + 1) ** 2 / (a2 + m) ** 2
    sigma2 = ((a1 - 1.0) - 2.0 * a1 * (a2 - 1.0) * (2 * m + (2 * m + 4) * a2) / (2 * a2 + 2 * m) ** 2) / a2**2
    return AsymptoticVariance(
        sigma=sigma,
        sigma1=float(sigma1),
        sigma2=float(sigma2),
        a1=float(a1),
        a2=float(a2),
        m=m,
        estimator_id=w.estimator_id,
        model_id=radial.kind if radial.param is None else f"{radial.kind}:{radial.param:g}",
    )


def real_variance_coeffs(
    w: WeightFunction,
    m: int,
    radial: RadialLaw | None = None,
    model_id: str = "gaussian",
    method: str = "auto",
) -> AsymptoticVariance:
    """Real-case analogue (|t|^2 ~ chi2_m under Gaussian data).

    a1 = E[psi^2] / (m (m+2)), a2 as in the complex case, and

        sigma1 = a1 (m+2)^2 / (2 a2 + m)^2,
        sigma2 = a2^{-2} [ (a1 - 1) - 2 a1 (a2 - 1) (m + (m+4) a2) / (2 a2 + m)^2 ].

    Matching bridge used in tests: the complex coefficients at dimension m
    equal the real ones at dimension 2m for the halved-argument weight
    u_r(s) = u(s/2).
    """
    if radial is None:
        radial = radial_law(model_id, m, complex_valued=False)
    expect = _Expectation(radial, method)
    sigma = solve_sigma(w, m, radial, expectation=expect)
    e_psi2, e_spsip = _coeff_expectations(w, sigma, expect)
    a1 = e_psi2 / (m * (m + 2))
    a2 = e_spsip / m
    sigma1 = a1 * (m + 2) ** 2 / (2 * a2 + m) ** 2
    sigma2 = ((a1 - 1.0) - 2.0 * a1 * (a2 - 1.0) * (m + (m + 4) * a2) / (2 * a2 + m) ** 2) / a2**2
    return AsymptoticVariance(
        sigma=sigma,
        sigma1=float(sigma1),
        sigma2=float(sigma2),
        a1=float(a1),
        a2=float(a2),
        m=m,
        estimator_id=w.estimator_id,
        model_id=radial.kind if radial.param is None else f"{radial.kind}:{radial.param:g}",
    )


def variance_coeffs(estimator_id: str, m: int, model_id: str = "gaussian") -> AsymptoticVariance:
    """Complex-case coefficients for an estimator/model given by id strings."""
    w = parse_estimator_id(estimator_id, m)
    if w is None:
        raise ValueError("tyler has no weight-function coefficients in this framework")
    av = complex_variance_coeffs(w, m, radial_law(model_id, m))
    return av


def scatter_asymptotic_covariance(mat: np.ndarray, sigma1: float, sigma2: float) -> CovariancePair:
    """Assemble the covariance/pseudo-covariance pair for an estimand M.

    Sigma = sigma1 M^T kron M + sigma2 vec(M) vec(M)^H and Omega = Sigma K;
    the assembly identity Omega = Sigma K holds exactly (a column
    permutation plus conjugation), and is asserted.
    """
    mat = linalg.symmetrize(np.asarray(mat, dtype=complex))
    m = mat.shape[0]
    base = linalg.kron(mat.T, mat)
    vm = linalg.vec(mat)
    sig = sigma1 * base + sigma2 * np.outer(vm, vm.conj())
    omega = sigma1 * linalg.apply_commutation_right(base, m) + sigma2 * np.outer(vm, vm)
    if not np.array_equal(omega, linalg.apply_commutation_right(sig, m)):
        raise AssertionError("pseudo-covariance must equal Sigma K exactly")
    return CovariancePair(Sigma=sig, Omega=omega)


def wishart_asymptotic_covariance(scatter: np.ndarray) -> CovariancePair:
    """SCM specialization under Gaussian data: (sigma1, sigma2) = (1, 0)."""
    return scatter_asymptotic_covariance(scatter, 1.0, 0.0)


def functional_asymptotic_variance(
    jac: np.ndarray,
    mat: np.ndarray,
    nu1: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Variance transfer to a degree-0 functional with Jacobian ``jac``.

    Requires jac @ vec(M) ~ 0 (the gradient of a scale-invariant functional
    is orthogonal to vec(M)); under that condition the rank-one sigma2 term
    is annihilated and

        Sigma_H = nu1 J (M^T kron M) J^H,
        Omega_H = nu1 J (M^T kron M) K J^T.
    """
    jac = np.atleast_2d(np.asarray(jac, dtype=complex))
    mat = np.asarray(mat, dtype=complex)
    m = mat.shape[0]
    vm = linalg.vec(mat)
    dots = np.abs(jac @ vm)
    bound = 1e-6 * np.linalg.norm(jac, axis=1) * np.linalg.norm(vm)
    if np.any(dots > np.maximum(bound, 1e-300)):
        raise HomogeneityError(
            f"Jacobian is not orthogonal to vec(M): |J vec(M)| = {dots.max():.3e} "
            f"exceeds {bound.max():.3e}; functional is not scale-invariant"
        )
    base = linalg.kron(mat.T, mat)
    sigma_h = nu1 * jac @ base @ jac.conj().T
    omega_h = nu1 * jac @ linalg.apply_commutation_right(base, m) @ jac.T
    return sigma_h, omega_h


def hermitian_jacobian(fn, mat: np.ndarray, step: float | None = None) -> np.ndarray:
    """Numerical Jacobian dH/d vec(M) under Hermitian-constrained perturbations.

    Central differences over the real coordinates of a Hermitian matrix
    (diagonal entries, and real/imaginary parts of the upper triangle,
    perturbing M_ij and M_ji conjugately), reassembled into the complex
    convention J[:, i + j*m] = dH/dM_ij.  For a linear functional
    H(M) = trace(A M) this recovers vec(A^T)^T exactly.
    """
    mat = np.asarray(mat, dtype=complex)
    m = mat.shape[0]
    probe = np.atleast_1d(np.asarray(fn(mat)))
    r = probe.size
    h = step if step is not None else 1e-5 * np.linalg.norm(mat)

    def df(direction):
        hi = np.atleast_1d(np.asarray(fn(mat + h * direction), dtype=complex))
        lo = np.atleast_1d(np.asarray(fn(mat - h * direction), dtype=complex))
        return (hi - lo) / (2.0 * h)

    jac = np.zeros((r, m * m), dtype=complex)
    for i in range(m):
        e = np.zeros((m, m), dtype=complex)
        e[i, i] = 1.0
        jac[:, i + i * m] = df(e)
    for i in range(m):
        for j in range(i + 1, m):
            p = np.zeros((m, m), dtype=complex)
            p[i, j] = 1.0
            p[j, i] = 1.0
            q = np.zeros((m, m), dtype=complex)
            q[i, j] = 1.0j
            q[j, i] = -1.0j
            gx = df(p)
            gy = df(q)
            jac[:, i + j * m] = 0.5 * (gx - 1.0j * gy)
            jac[:, j + i * m] = 0.5 * (gx + 1.0j * gy)
    return jac
