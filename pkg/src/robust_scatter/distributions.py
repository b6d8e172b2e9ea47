"""Samplers for zero-mean complex elliptical models and chi-square helpers.

Every sampler takes an explicit ``numpy.random.Generator`` so that a
(seed, stream-id) pair reproduces the same byte sequence regardless of
thread scheduling; :func:`make_stream` builds such generators from a
counter-based PRNG.

Model identifiers used in experiment configs: ``"gaussian"``,
``"k-dist:<nu>"`` (Gamma texture with unit mean, so the population
covariance equals the scatter matrix), ``"student-t:<dof>"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special, stats

from . import linalg

__all__ = [
    "make_stream",
    "gamma_sampler",
    "chi2_cdf",
    "chi2_quantile",
    "sample_complex_gaussian",
    "sample_k_distributed",
    "sample_student_t",
    "EllipticalModel",
    "parse_model_id",
    "RadialLaw",
    "radial_law",
]


def make_stream(seed: int, stream: int | tuple[int, ...] = 0) -> np.random.Generator:
    """Independent generator for (seed, stream-id).

    Philox is counter-based, so distinct stream ids give statistically
    independent sequences and the mapping is bit-reproducible on a platform.
    """
    if isinstance(stream, int):
        stream = (stream,)
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def gamma_sampler(shape: float, scale: float, rng: np.random.Generator, size=None):
    """Gamma variates, valid down to very small shape (heavy-tail textures)."""
    if shape <= 0 or scale <= 0:
        raise ValueError("gamma shape and scale must be positive")
    return rng.gamma(shape, scale, size=size)


def chi2_cdf(x, k: float):
    """Chi-square CDF, the regularized lower incomplete gamma P(k/2, x/2)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("chi-square CDF argument must be non-negative")
    if k <= 0:
        raise ValueError("degrees of freedom must be positive")
    out = special.gammainc(0.5 * k, 0.5 * x)
    return float(out) if out.ndim == 0 else out


def chi2_quantile(p: float, k: float) -> float:
    """Inverse of :func:`chi2_cdf` in its first argument."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile probability must lie in (0, 1), got {p}")
    if k <= 0:
        raise ValueError("degrees of freedom must be positive")
    return float(2.0 * special.gammaincinv(0.5 * k, p))


def _speckle(scatter_sqrt: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """n circular complex Gaussian rows with covariance scatter_sqrt^2."""
    m = scatter_sqrt.shape[0]
    re = rng.standard_normal((n, m))
    im = rng.standard_normal((n, m))
    w = np.sqrt(0.5) * (re + 1j * im)
    return w @ scatter_sqrt.T


def sample_complex_gaussian(scatter: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """n rows z = Lambda^{1/2} w with E[z z^H] = Lambda and E[z z^T] = 0."""
    return _speckle(linalg.herm_sqrt(scatter), n, rng)


def sample_k_distributed(
    scatter: np.ndarray,
    nu: float,
    n: int,
    rng: np.random.Generator,
    return_texture: bool = False,
):
    """Compound-Gaussian rows z = sqrt(tau) x, tau ~ Gamma(nu, 1/nu).

    The texture has unit mean, so E[z z^H] = scatter; small nu gives
    impulsive (heavy-tailed) samples.  Texture draws precede the speckle
    draws in the stream.
    """
    if nu <= 0:
        raise ValueError("K-distribution shape parameter must be positive")
    tau = gamma_sampler(nu, 1.0 / nu, rng, size=n)
    x = _speckle(linalg.herm_sqrt(scatter), n, rng)
    z = np.sqrt(tau)[:, None] * x
    return (z, tau) if return_texture else z


def sample_student_t(scatter: np.ndarray, dof: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Complex multivariate-t rows z = sqrt(dof / g) x with g ~ chi2_dof.

    Covariance is scatter * dof/(dof - 2) for dof > 2 (the scatter matrix is
    the shape parameter here, not the covariance).
    """
    if dof <= 0:
        raise ValueError("degrees of freedom must be positive")
    g = rng.chisquare(dof, size=n)
    x = _speckle(linalg.herm_sqrt(scatter), n, rng)
    return np.sqrt(dof / g)[:, None] * x


def parse_model_id(model_id: str) -> tuple[str, float | None]:
    """Split a model string into (kind, parameter)."""
    s = model_id.strip().lower()
    if s == "gaussian":
        return "gaussian", None
    if s.startswith("k-dist:"):
        nu = float(s.split(":", 1)[1])
        if nu <= 0:
            raise ValueError(f"invalid K-distribution shape in {model_id!r}")
        return "k-dist", nu
    if s.startswith("student-t:"):
        dof = float(s.split(":", 1)[1])
        if dof <= 0:
            raise ValueError(f"invalid Student-t dof in {model_id!r}")
        return "student-t", dof
    raise ValueError(f"unknown model id {model_id!r}")


@dataclass(frozen=True)
class EllipticalModel:
    """Zero-mean complex elliptical sampler: a scatter matrix plus a radial law."""

    scatter: np.ndarray
    kind: str = "gaussian"
    param: float | None = None
    _sqrt: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        scatter = np.asarray(self.scatter, dtype=complex)
        if not linalg.is_hermitian(scatter):
            raise ValueError("scatter matrix must be Hermitian")
        object.__setattr__(self, "scatter", scatter)
        object.__setattr__(self, "_sqrt", linalg.herm_sqrt(scatter))
        if self.kind not in ("gaussian", "k-dist", "student-t"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind != "gaussian" and (self.param is None or self.param <= 0):
            raise ValueError(f"model kind {self.kind!r} needs a positive parameter")

    @classmethod
    def from_id(cls, model_id: str, scatter: np.ndarray) -> "EllipticalModel":
        kind, param = parse_model_id(model_id)
        return cls(scatter=scatter, kind=kind, param=param)

    @property
    def dim(self) -> int:
        return self.scatter.shape[0]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "gaussian":
            return _speckle(self._sqrt, n, rng)
        if self.kind == "k-dist":
            tau = gamma_sampler(self.param, 1.0 / self.param, rng, size=n)
            return np.sqrt(tau)[:, None] * _speckle(self._sqrt, n, rng)
        g = rng.chisquare(self.param, size=n)
        return np.sqrt(self.param / g)[:, None] * _speckle(self._sqrt, n, rng)


@dataclass(frozen=True)
class RadialLaw:
    """Distribution of |t|^2 for unit-scatter samples t of a model kind.

    For the Gaussian kind |t|^2 is (1/2) chi2_{2m} (real embedding: chi2_m)
    and expectations integrate against the exact density; other kinds only
    support sampling, so callers fall back to Monte-Carlo averages.
    """

    kind: str
    m: int
    param: float | None = None
    complex_valued: bool = True

    @property
    def exact(self) -> bool:
        return self.kind == "gaussian"

    @property
    def _dof(self) -> int:
        return 2 * self.m if self.complex_valued else self.m

    @property
    def _half(self) -> float:
        # |t|^2 = chi2_dof * _half under the Gaussian kind
        return 0.5 if self.complex_valued else 1.0

    def expect(self, fn, kinks=()) -> float:
        """E[fn(|t|^2)] by adaptive quadrature (Gaussian kind only).

        ``kinks`` lists interior points where fn is not smooth (weight
        function breakpoints), passed through to the integrator.
        """
        if not self.exact:
            raise ValueError(f"no exact expectation for kind {self.kind!r}")
        dof, half = self._dof, self._half
        hi = 2.0 * special.gammaincinv(0.5 * dof, 1.0 - 1e-14)
        pts = sorted(p / half for p in kinks if 0.0 < p / half < hi)
        val, _ = integrate.quad(
            lambda x: fn(half * x) * stats.chi2.pdf(x, dof),
            0.0,
            hi,
            points=pts or None,
            limit=400,
            epsabs=1e-12,
            epsrel=1e-11,
        )
        return val

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        base = self._half * rng.chisquare(self._dof, size=n)
        if self.kind == "gaussian":
            return base
        if self.kind == "k-dist":
            return gamma_sampler(self.param, 1.0 / self.param, rng, size=n) * base
        return (self.param / rng.chisquare(self.param, size=n)) * base


def radial_law(model_id: str, m: int, complex_valued: bool = True) -> RadialLaw:
    kind, param = parse_model_id(model_id)
    return RadialLaw(kind=kind, m=m, param=param, complex_valued=complex_valued)
