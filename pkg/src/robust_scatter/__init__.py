"""Robust complex covariance estimation toolkit.

M-estimators of scatter for complex elliptical data (SCM, Huber, Tyler),
their asymptotic covariance coefficients and the variance transfer to
scale-invariant functionals, together with MUSIC DOA estimation, the ANMF
detection statistic, and a reproducible Monte-Carlo harness.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .applications import DoaSearch, UlaConfig, anmf_statistic, music_doa, music_spectrum, steering_vector
from .asymptotics import (
    AsymptoticVariance,
    CovariancePair,
    complex_variance_coeffs,
    functional_asymptotic_variance,
    hermitian_jacobian,
    real_variance_coeffs,
    scatter_asymptotic_covariance,
    solve_sigma,
    variance_coeffs,
    wishart_asymptotic_covariance,
)
from .distributions import (
    EllipticalModel,
    chi2_cdf,
    chi2_quantile,
    gamma_sampler,
    make_stream,
    radial_law,
    sample_complex_gaussian,
    sample_k_distributed,
    sample_student_t,
)
from .estimators import (
    ScatterEstimate,
    WeightFunction,
    estimate,
    huber_tuning,
    huber_weight,
    m_estimate_fixed_point,
    scm,
    scm_weight,
    tyler_estimate,
)
from .experiments import ExperimentConfig, ExperimentResult, load_config, run_experiment, serialize_results

__version__ = "0.1.0"
