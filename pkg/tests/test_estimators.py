import numpy as np
import pytest

from robust_scatter import estimators as est
from robust_scatter import linalg
from robust_scatter.distributions import make_stream, sample_complex_gaussian, sample_k_distributed

from conftest import random_complex


def gaussian_samples(n, scatter=None, m=3, seed=0):
    scatter = np.eye(m) if scatter is None else scatter
    return sample_complex_gaussian(scatter, n, make_stream(4040, seed))


# ---------------------------------------------------------------- SCM


def test_scm_single_sample_warns_rank_deficient():
    with pytest.warns(UserWarning):
        out = est.scm(np.array([[1.0 + 0j, 0.0]]))
    assert np.array_equal(out.matrix, [[1.0, 0.0], [0.0, 0.0]])
    assert not out.pd
    assert out.iterations == 0 and out.sigma == 1.0


def test_scm_consistency():
    scatter = np.diag([1.0, 2.0, 3.0]).astype(complex)
    z = gaussian_samples(10_000, scatter)
    out = est.scm(z)
    assert np.linalg.norm(out.matrix - scatter) / np.linalg.norm(scatter) < 0.05
    assert out.pd


def test_scm_scaling_exact():
    z = gaussian_samples(50)
    base = est.scm(z).matrix
    assert np.array_equal(est.scm(2.0 * z).matrix, 4.0 * base)
    assert np.array_equal(est.scm(2.0j * z).matrix, 4.0 * base)


# ---------------------------------------------------------------- Huber tuning / weight


def test_huber_tuning_regression_constants():
    k2, beta = est.huber_tuning(0.75, 3)
    assert k2 == pytest.approx(3.920402060292561, abs=1e-12)
    assert beta == pytest.approx(0.8775266537413353, abs=1e-12)


def test_huber_tuning_against_mpmath():
    # independent incomplete-gamma route for the defining relations
    import mpmath as mp

    def cdf(x, k):
        return float(mp.gammainc(k / 2, 0, x / 2, regularized=True))

    for q, m in ((0.75, 3), (0.9, 2), (0.5, 5)):
        k2, beta = est.huber_tuning(q, m)
        assert abs(cdf(2 * k2, 2 * m) - q) < 1e-12
        assert abs(beta - (cdf(2 * k2, 2 * m + 2) + k2 * (1 - q) / m)) < 1e-12


def test_huber_tuning_monotone_and_limits():
    ks = [est.huber_tuning(q, 3)[0] for q in np.linspace(0.05, 0.95, 10)]
    assert np.all(np.diff(ks) > 0)
    k2, beta = est.huber_tuning(0.999999, 3)
    assert k2 > 15.0
    assert abs(beta - 1.0) < 1e-3
    w = est.huber_weight(0.999999, 3)
    assert abs(w.u(np.array([5.0]))[0] - 1.0) < 0.01
    with pytest.raises(ValueError):
        est.huber_tuning(0.0, 3)
    with pytest.raises(ValueError):
        est.huber_tuning(1.0, 3)


def test_huber_weight_values():
    w = est.huber_weight(0.75, 3)
    k2, beta = w.params["k2"], w.params["beta"]
    assert w.u(np.array([0.0]))[0] == pytest.approx(1.0 / beta, rel=1e-15)
    assert w.u(np.array([2 * k2]))[0] == pytest.approx(1.0 / (2 * beta), rel=1e-15)
    s = np.linspace(0, 10 * k2, 500)
    psi = w.psi(s)
    assert np.all(np.diff(psi) >= 0)
    assert psi.max() <= k2 / beta + 1e-15
    assert w.psi_prime(np.array([k2]))[0] == pytest.approx(1.0 / beta)  # left value at the kink
    assert w.psi_prime(np.array([k2 * 1.0001]))[0] == 0.0


def test_huber_split_identity():
    # the clipped-part + outlier-part decomposition reproduces the
    # single-sum weights exactly, and the assembled matrices agree
    w = est.huber_weight(0.75, 3)
    k2, beta = w.params["k2"], w.params["beta"]
    z = gaussian_samples(400)
    mat = est.scm(z).matrix
    from robust_scatter._kernels import quad_forms, weighted_scatter

    s = quad_forms(z, linalg.herm_inv(mat))
    w_single = w.u(s)
    w_clip = (1.0 / beta) * (s <= k2).astype(float)
    w_out = np.where(s > k2, (1.0 / beta) * (k2 / np.maximum(s, k2)), 0.0)
    assert np.array_equal(w_single, w_clip + w_out)
    combined = weighted_scatter(z, w_clip) + weighted_scatter(z, w_out)
    single = weighted_scatter(z, w_single)
    assert np.allclose(single, combined, rtol=1e-14, atol=1e-16)


def test_weight_validation_rejects_bad_functions():
    increasing = est.WeightFunction(
        estimator_id="bad",
        u=lambda s: np.asarray(s, dtype=float),
        psi=lambda s: np.asarray(s, dtype=float) ** 2,
        psi_prime=lambda s: 2 * np.asarray(s, dtype=float),
        psi_sup=np.inf,
    )
    with pytest.raises(ValueError):
        increasing.validate(3)
    bounded = est.WeightFunction(
        estimator_id="too-small",
        u=lambda s: 1.0 / (1.0 + np.asarray(s, dtype=float)),
        psi=lambda s: np.asarray(s, dtype=float) / (1.0 + np.asarray(s, dtype=float)),
        psi_prime=lambda s: (1.0 + np.asarray(s, dtype=float)) ** -2,
        psi_sup=1.0,
    )
    with pytest.raises(ValueError):
        bounded.validate(3)


# ---------------------------------------------------------------- fixed point


def test_fixed_point_constant_weight_is_scm():
    z = gaussian_samples(200)
    ref = est.scm(z).matrix
    for init in (None, np.diag([9.0, 1.0, 4.0]).astype(complex)):
        out = est.m_estimate_fixed_point(z, est.scm_weight(), init=init)
        assert np.allclose(out.matrix, ref, rtol=1e-14)
        assert out.iterations <= 2  # rhs is constant; one update lands on it


def test_fixed_point_huber_consistency_and_scale():
    n = 1000
    z = gaussian_samples(n)
    out = est.m_estimate_fixed_point(z, est.huber_weight(0.75, 3))
    assert np.linalg.norm(out.matrix - np.eye(3)) / np.sqrt(3) < 0.1
    assert abs(np.trace(out.matrix).real / 3 - 1.0) < 3.0 / np.sqrt(n)
    assert out.residual < 10 * est.DEFAULT_TOL


def test_fixed_point_equivariance():
    rng = make_stream(2024)
    z = gaussian_samples(600)
    a = random_complex(rng, 3, 3) + 2 * np.eye(3)
    w = est.huber_weight(0.75, 3)
    direct = est.m_estimate_fixed_point(z @ a.T, w, tol=1e-12).matrix
    mapped = a @ est.m_estimate_fixed_point(z, w, tol=1e-12).matrix @ a.conj().T
    assert np.linalg.norm(direct - mapped) / np.linalg.norm(mapped) < 1e-8
    scm_direct = est.scm(z @ a.T).matrix
    scm_mapped = a @ est.scm(z).matrix @ a.conj().T
    assert np.linalg.norm(scm_direct - scm_mapped) / np.linalg.norm(scm_mapped) < 1e-12


def test_fixed_point_monotone_tail():
    z = gaussian_samples(500, seed=3)
    out = est.m_estimate_fixed_point(z, est.huber_weight(0.75, 3))
    tail = out.deltas[-5:]
    assert np.all(np.diff(tail) <= 0)


def test_fixed_point_nonconvergence_carries_state():
    z = gaussian_samples(300, seed=4)
    with pytest.raises(est.ConvergenceError) as excinfo:
        est.m_estimate_fixed_point(z, est.huber_weight(0.75, 3), max_iter=2)
    assert excinfo.value.last is not None
    assert excinfo.value.residual is not None


def test_degenerate_data_errors():
    w = est.huber_weight(0.75, 3)
    with pytest.raises(est.DegenerateData):
        est.m_estimate_fixed_point(gaussian_samples(3), w)  # n <= m
    v = np.array([1.0, 1.0j, 0.5])
    rank1 = np.outer(np.arange(1, 21), v)
    with pytest.raises(est.DegenerateData):
        est.m_estimate_fixed_point(rank1, w)


def test_huber_scm_limit():
    z = gaussian_samples(2000, seed=5)
    huber = est.m_estimate_fixed_point(z, est.huber_weight(0.999, 3)).matrix
    ref = est.scm(z).matrix
    assert np.linalg.norm(huber - ref) / np.linalg.norm(ref) < 0.01


def test_huber_clipping_fraction():
    z = gaussian_samples(5000, seed=6)
    w = est.huber_weight(0.75, 3)
    out = est.m_estimate_fixed_point(z, w)
    from robust_scatter._kernels import quad_forms

    s = quad_forms(z, linalg.herm_inv(out.matrix))
    frac = np.mean(s <= w.params["k2"])
    assert abs(frac - 0.75) < 0.03


# ---------------------------------------------------------------- Tyler


def test_tyler_scale_invariance():
    z = gaussian_samples(400, seed=7)
    raw = est.tyler_estimate(z).matrix
    unit = est.tyler_estimate(z / np.linalg.norm(z, axis=1, keepdims=True)).matrix
    assert np.linalg.norm(raw - unit) / np.linalg.norm(raw) < 1e-7
    rng = make_stream(11)
    scales = rng.standard_normal(400) + 1j * rng.standard_normal(400)
    rescaled = est.tyler_estimate(z * scales[:, None]).matrix
    assert np.linalg.norm(raw - rescaled) / np.linalg.norm(raw) < 1e-7


def test_tyler_gaussian_consistency():
    z = gaussian_samples(2000, seed=8)
    out = est.tyler_estimate(z)
    assert np.trace(out.matrix).real == pytest.approx(3.0, abs=1e-9)
    assert np.linalg.norm(out.matrix - np.eye(3)) < 0.1


def test_tyler_texture_invariance():
    scatter = np.diag([0.5, 1.0, 1.5]).astype(complex)  # trace 3
    z = sample_k_distributed(scatter, 0.1, 5000, make_stream(4321))
    out = est.tyler_estimate(z)
    assert np.linalg.norm(out.matrix - scatter) / np.linalg.norm(scatter) < 0.10


def test_tyler_det_normalization():
    z = gaussian_samples(500, seed=9)
    out = est.tyler_estimate(z, normalization="det")
    assert np.linalg.det(out.matrix).real == pytest.approx(1.0, abs=1e-9)


def test_tyler_rejects_zero_sample():
    z = gaussian_samples(100, seed=10)
    z[17] = 0.0
    with pytest.raises(est.DegenerateData):
        est.tyler_estimate(z)


# ---------------------------------------------------------------- dispatch


def test_estimate_dispatch():
    z = gaussian_samples(300, seed=12)
    assert est.estimate(z, "scm").estimator_id == "scm"
    assert est.estimate(z, "huber:0.75").estimator_id == "huber:0.75"
    assert est.estimate(z, "tyler").estimator_id == "tyler"
    with pytest.raises(ValueError):
        est.estimate(z, "mcd")
