import numpy as np
import pytest
from scipy import stats

from robust_scatter import distributions as d


def test_stream_reproducibility():
    a = d.make_stream(123, 7).standard_normal(100)
    b = d.make_stream(123, 7).standard_normal(100)
    c = d.make_stream(123, 8).standard_normal(100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    t1 = d.make_stream(5, (2, 9)).standard_normal(10)
    t2 = d.make_stream(5, (2, 9)).standard_normal(10)
    assert np.array_equal(t1, t2)


def test_gaussian_moments():
    rng = d.make_stream(1)
    z = d.sample_complex_gaussian(np.eye(3), 100_000, rng)
    cov = z.T @ z.conj() / z.shape[0]
    assert np.linalg.norm(cov - np.eye(3)) / np.sqrt(3) < 0.03
    pseudo = z.T @ z / z.shape[0]
    assert np.linalg.norm(pseudo) < 0.03


def test_gaussian_scatter_recovery():
    scatter = np.array([[2.0, 0.5 + 0.5j, 0.0], [0.5 - 0.5j, 1.0, 0.2j], [0.0, -0.2j, 0.5]])
    rng = d.make_stream(2)
    n = 100_000
    z = d.sample_complex_gaussian(scatter, n, rng)
    cov = z.T @ z.conj() / n
    assert np.linalg.norm(cov - scatter) / np.linalg.norm(scatter) < 5 * 3 / np.sqrt(n)


def test_gaussian_empty():
    z = d.sample_complex_gaussian(np.eye(3), 0, d.make_stream(0))
    assert z.shape == (0, 3)


def test_k_dist_large_nu_is_gaussian_like():
    rng = d.make_stream(3)
    z = d.sample_k_distributed(np.eye(1), 1e6, 100_000, rng)
    assert abs(stats.kurtosis(z[:, 0].real)) < 0.1


def test_k_dist_heavy_tail_moments():
    rng = d.make_stream(4)
    n = 1_000_000
    z = d.sample_k_distributed(np.eye(2), 0.1, n, rng)
    cov = z.T @ z.conj() / n
    assert np.linalg.norm(cov - np.eye(2)) / np.sqrt(2) < 0.10


def test_k_dist_texture_conditionally_gaussian():
    rng = d.make_stream(5)
    z, tau = d.sample_k_distributed(np.eye(3), 0.5, 50_000, rng, return_texture=True)
    whitened = z / np.sqrt(tau)[:, None]
    cov = whitened.T @ whitened.conj() / whitened.shape[0]
    assert np.linalg.norm(cov - np.eye(3)) / np.sqrt(3) < 0.03
    assert abs(stats.kurtosis(whitened[:, 0].real)) < 0.1


def test_k_dist_rejects_bad_shape():
    with pytest.raises(ValueError):
        d.sample_k_distributed(np.eye(2), -0.1, 10, d.make_stream(0))


def test_circularity_all_kinds():
    n = 100_000
    tol = 5.0 / np.sqrt(n)
    for kind, param in (("gaussian", None), ("k-dist", 0.5), ("student-t", 5.0)):
        model = d.EllipticalModel(scatter=np.eye(2), kind=kind, param=param)
        z = model.sample(n, d.make_stream(6))
        pseudo = z.T @ z / n
        assert np.all(np.abs(pseudo) < tol), kind


def test_student_t_scatter_shape():
    rng = d.make_stream(7)
    dof = 8.0
    z = d.sample_student_t(np.eye(2), dof, 200_000, rng)
    cov = z.T @ z.conj() / z.shape[0]
    assert np.linalg.norm(cov - (dof / (dof - 2)) * np.eye(2)) < 0.1


def test_chi2_cdf_closed_form():
    assert d.chi2_cdf(0.0, 5) == 0.0
    assert abs(d.chi2_cdf(2 * np.log(2), 2) - 0.5) < 1e-14
    for x in (1.0, 5.0, 10.0):
        assert abs(d.chi2_cdf(x, 2) - (1 - np.exp(-x / 2))) < 1e-12
    with pytest.raises(ValueError):
        d.chi2_cdf(-1.0, 2)


def test_chi2_cdf_monotone():
    rng = d.make_stream(8)
    for _ in range(50):
        k = float(rng.uniform(0.5, 30))
        xs = np.sort(rng.uniform(0, 50, size=10))
        vals = d.chi2_cdf(xs, k)
        assert np.all(np.diff(vals) >= 0)


def test_chi2_quantile():
    assert abs(d.chi2_quantile(0.5, 2) - 2 * np.log(2)) < 1e-12
    rng = d.make_stream(9)
    for _ in range(25):
        x = float(rng.uniform(0.05, 40))
        k = float(rng.uniform(1, 20))
        assert abs(d.chi2_quantile(d.chi2_cdf(x, k), k) - x) < 1e-8 * max(x, 1)
    assert d.chi2_quantile(1e-12, 4) < 1e-4
    with pytest.raises(ValueError):
        d.chi2_quantile(0.0, 3)
    with pytest.raises(ValueError):
        d.chi2_quantile(1.5, 3)


def test_chi2_quantile_residual():
    for p in (0.01, 0.25, 0.75, 0.999):
        for k in (1, 2, 6, 11):
            x = d.chi2_quantile(p, k)
            assert abs(d.chi2_cdf(x, k) - p) < 1e-10


def test_gamma_small_shape_moments():
    rng = d.make_stream(10)
    n = 1_000_000
    shape, scale = 0.1, 10.0
    x = d.gamma_sampler(shape, scale, rng, size=n)
    assert abs(x.mean() - shape * scale) / (shape * scale) < 0.01
    assert abs(x.var() - shape * scale**2) / (shape * scale**2) < 0.03


def test_gamma_shape_one_is_exponential():
    rng = d.make_stream(11)
    x = d.gamma_sampler(1.0, 2.0, rng, size=100_000)
    ks = stats.kstest(x, "expon", args=(0, 2.0))
    assert ks.pvalue > 0.01


def test_radial_law_gaussian_expectations():
    law = d.radial_law("gaussian", 3)
    # |t|^2 ~ chi2_6 / 2: mean m, second moment m(m+1)
    assert abs(law.expect(lambda s: s) - 3.0) < 1e-9
    assert abs(law.expect(lambda s: s**2) - 12.0) < 1e-8
    samples = law.sample(200_000, d.make_stream(12))
    assert abs(samples.mean() - 3.0) < 0.02


def test_radial_law_kinds():
    with pytest.raises(ValueError):
        d.radial_law("k-dist:0.5", 3).expect(lambda s: s)
    mc = d.radial_law("k-dist:0.5", 3).sample(500_000, d.make_stream(13))
    assert abs(mc.mean() - 3.0) < 0.05
    with pytest.raises(ValueError):
        d.parse_model_id("cauchy")
    with pytest.raises(ValueError):
        d.parse_model_id("k-dist:-1")
