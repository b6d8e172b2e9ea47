"""Scale-invariant array-processing functionals: MUSIC DOA and the ANMF test.

Both outputs depend on the covariance estimate only through its scale-free
part (noise subspace / whitened angles), which is exactly the degree-0
homogeneity the variance-transfer result requires: replacing M by alpha*M
leaves them unchanged.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linalg

__all__ = [
    "UlaConfig",
    "DoaSearch",
    "steering_vector",
    "steering_matrix",
    "music_spectrum",
    "music_doa",
    "anmf_statistic",
]


@dataclass(frozen=True)
class UlaConfig:
    """Uniform linear array: sensor count, spacing in wavelengths, source count."""

    m: int
    spacing: float = 0.5
    sources: int = 1

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("array needs at least two sensors")
        if not 0.0 < self.spacing <= 0.5:
            raise ValueError("spacing must lie in (0, 0.5] wavelengths for unambiguous steering")
        if not 0 < self.sources < self.m:
            raise ValueError("source count must lie in [1, m)")


def steering_vector(theta_deg: float, cfg: UlaConfig) -> np.ndarray:
    """Unit-modulus steering vector exp(j 2 pi d i sin(theta)), i = 0..m-1."""
    phase = 2.0 * np.pi * cfg.spacing * np.sin(np.deg2rad(theta_deg))
    return np.exp(1j * phase * np.arange(cfg.m))


def steering_matrix(thetas_deg: np.ndarray, cfg: UlaConfig) -> np.ndarray:
    """Steering vectors for a grid of angles, one column per angle."""
    phases = 2.0 * np.pi * cfg.spacing * np.sin(np.deg2rad(np.asarray(thetas_deg, dtype=float)))
    return np.exp(1j * np.outer(np.arange(cfg.m), phases))


@dataclass
class DoaSearch:
    """Search grid for the DOA scan plus its cached steering matrix.

    ``refine`` enables 3-point parabolic interpolation of the log-spectrum
    around the grid argmax (skipped, with a warning, at grid boundaries).
    """

    grid: np.ndarray
    refine: bool = True
    _steering: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_step(cls, step_deg: float = 0.01, lo: float = -90.0, hi: float = 90.0, refine: bool = True):
        return cls(grid=np.arange(lo, hi, step_deg), refine=refine)

    def steering_for(self, cfg: UlaConfig) -> np.ndarray:
        key = (cfg.m, cfg.spacing)
        if key not in self._steering:
            self._steering[key] = steering_matrix(self.grid, cfg)
        return self._steering[key]


def _noise_subspace(mat: np.ndarray, cfg: UlaConfig) -> np.ndarray:
    _, v = linalg.herm_eig(mat)
    return v[:, : cfg.m - cfg.sources]


def _spectrum_from_steering(mat: np.ndarray, cfg: UlaConfig, a: np.ndarray) -> np.ndarray:
    en = _noise_subspace(mat, cfg)
    proj = en.conj().T @ a
    return 1.0 / np.einsum("ij,ij->j", proj, proj.conj()).real


def music_spectrum(mat: np.ndarray, cfg: UlaConfig, grid: np.ndarray) -> np.ndarray:
    """Pseudo-spectrum P(theta) = 1 / ||E_n^H a(theta)||^2 over the grid.

    E_n spans the eigenvectors of the m - sources smallest eigenvalues;
    positive rescaling of the matrix leaves P unchanged.
    """
    a = steering_matrix(np.asarray(grid, dtype=float), cfg)
    return _spectrum_from_steering(mat, cfg, a)


def _refine_peak(grid: np.ndarray, logp: np.ndarray, idx: int) -> float:
    if idx == 0 or idx == len(grid) - 1:
        warnings.warn("spectrum peak at grid boundary; refinement skipped", stacklevel=3)
        return float(grid[idx])
    lm, l0, lp = logp[idx - 1], logp[idx], logp[idx + 1]
    denom = lm - 2.0 * l0 + lp
    if denom >= 0.0:
        return float(grid[idx])
    step = grid[idx + 1] - grid[idx]
    return float(grid[idx] + 0.5 * (lm - lp) / denom * step)


def music_doa(mat: np.ndarray, cfg: UlaConfig, search: DoaSearch) -> np.ndarray:
    """DOA estimates (degrees, ascending) from the MUSIC pseudo-spectrum.

    Grid argmax per source followed by parabolic refinement of the
    log-spectrum; ties break toward the lowest angle (argmax returns the
    first maximizer).
    """
    spec = _spectrum_from_steering(mat, cfg, search.steering_for(cfg))
    logp = np.log(spec)
    if cfg.sources == 1:
        peaks = [int(np.argmax(spec))]
    else:
        interior = (spec[1:-1] > spec[:-2]) & (spec[1:-1] >= spec[2:])
        cand = np.flatnonzero(interior) + 1
        if len(cand) < cfg.sources:
            cand = np.argsort(spec)[-cfg.sources :]
        order = np.argsort(-spec[cand], kind="stable")
        peaks = sorted(cand[order][: cfg.sources].tolist())
    thetas = [_refine_peak(search.grid, logp, i) if search.refine else float(search.grid[i]) for i in peaks]
    return np.asarray(sorted(thetas))


def anmf_statistic(y: np.ndarray, p: np.ndarray, mat: np.ndarray) -> float:
    """Normalized matched-filter statistic |p^H M^-1 y|^2 / ((p^H M^-1 p)(y^H M^-1 y)).

    A squared cosine in the whitened geometry: real, in [0, 1], invariant to
    positive rescaling of M and to nonzero complex rescaling of y or p.
    """
    y = np.asarray(y, dtype=complex).reshape(-1)
    p = np.asarray(p, dtype=complex).reshape(-1)
    if y.shape != p.shape or y.size != np.asarray(mat).shape[0]:
        raise ValueError("dimension mismatch between y, p and the covariance estimate")
    if not np.any(y) or not np.any(p):
        raise ValueError("y and p must be nonzero")
    mi = linalg.herm_inv(mat)
    cross = p.conj() @ mi @ y
    pp = (p.conj() @ mi @ p).real
    yy = (y.conj() @ mi @ y).real
    return float(abs(cross) ** 2 / (pp * yy))
