import numpy as np
import pytest

from robust_scatter import applications as app
from robust_scatter.distributions import make_stream

from conftest import random_complex, random_hermitian


CFG3 = app.UlaConfig(m=3)


def one_source_covariance(theta, cfg, power=4.0, noise=1.0):
    a = app.steering_vector(theta, cfg)
    return noise * np.eye(cfg.m) + power * np.outer(a, a.conj())


def test_ula_config_validation():
    with pytest.raises(ValueError):
        app.UlaConfig(m=3, spacing=0.7)
    with pytest.raises(ValueError):
        app.UlaConfig(m=3, sources=3)
    with pytest.raises(ValueError):
        app.UlaConfig(m=1)


def test_steering_vector_props():
    v = app.steering_vector(0.0, CFG3)
    assert np.array_equal(v, np.ones(3))
    for theta in (-60.0, 10.0, 45.0):
        v = app.steering_vector(theta, CFG3)
        assert np.allclose(np.abs(v), 1.0)
    grid = np.array([-30.0, 0.0, 30.0])
    mat = app.steering_matrix(grid, CFG3)
    for j, theta in enumerate(grid):
        assert np.array_equal(mat[:, j], app.steering_vector(theta, CFG3))


def test_music_peak_at_exact_covariance():
    cov = one_source_covariance(20.0, CFG3)
    grid = np.arange(-90.0, 90.0, 0.1)
    spec = app.music_spectrum(cov, CFG3, grid)
    assert abs(grid[np.argmax(spec)] - 20.0) <= 0.1


@pytest.mark.parametrize("theta", [20.0, -35.5])
def test_music_doa_exact_with_refinement(theta):
    cov = one_source_covariance(theta, CFG3)
    search = app.DoaSearch.from_step(0.01)
    est = app.music_doa(cov, CFG3, search)[0]
    assert abs(est - theta) < 0.005


def test_music_scale_invariance():
    # a generic full-rank estimate keeps the spectrum finite everywhere,
    # where pointwise relative comparison is meaningful
    rng = make_stream(54)
    cov = random_hermitian(rng, 3)
    grid = np.arange(-90.0, 90.0, 0.5)
    base = app.music_spectrum(cov, CFG3, grid)
    scaled = app.music_spectrum(5.0 * cov, CFG3, grid)
    assert np.allclose(scaled, base, rtol=1e-10)
    cov_src = one_source_covariance(11.0, CFG3, power=2.5)
    search = app.DoaSearch.from_step(0.02)
    for alpha in (1e-3, 1.0, 1e3):
        assert abs(app.music_doa(alpha * cov_src, CFG3, search)[0] - app.music_doa(cov_src, CFG3, search)[0]) < 1e-10


def test_music_boundary_warning():
    # peak lies left of the truncated grid, so the argmax sits on its edge
    cov = one_source_covariance(-85.0, CFG3)
    search = app.DoaSearch(grid=np.arange(-84.0, -80.0, 0.1))
    with pytest.warns(UserWarning):
        app.music_doa(cov, CFG3, search)


def test_music_two_sources():
    cfg = app.UlaConfig(m=6, sources=2)
    cov = one_source_covariance(-20.0, cfg) + 4.0 * np.outer(
        app.steering_vector(25.0, cfg), app.steering_vector(25.0, cfg).conj()
    )
    search = app.DoaSearch.from_step(0.02)
    thetas = app.music_doa(cov, cfg, search)
    assert np.allclose(thetas, [-20.0, 25.0], atol=0.05)


def test_anmf_trivial_values():
    mat = np.eye(3)
    p = np.array([1.0, 0.0, 0.0], dtype=complex)
    assert app.anmf_statistic(p, p, mat) == pytest.approx(1.0, abs=1e-14)
    y_orth = np.array([0.0, 1.0, 0.5j])
    assert app.anmf_statistic(y_orth, p, mat) == pytest.approx(0.0, abs=1e-14)
    y = np.array([1.0, 1.0, 0.0], dtype=complex)
    assert app.anmf_statistic(y, p, mat) == pytest.approx(0.5, abs=1e-14)


def test_anmf_bounds_on_random_triples():
    rng = make_stream(55)
    for _ in range(10_000):
        mat = random_hermitian(rng, 3)
        y = random_complex(rng, 3)
        p = random_complex(rng, 3)
        lam = app.anmf_statistic(y, p, mat)
        assert 0.0 <= lam <= 1.0 + 1e-12


def test_anmf_invariances():
    rng = make_stream(56)
    mat = random_hermitian(rng, 4)
    y = random_complex(rng, 4)
    p = random_complex(rng, 4)
    base = app.anmf_statistic(y, p, mat)
    for alpha in (1e-3, 1e3):
        assert abs(app.anmf_statistic(y, p, alpha * mat) - base) < 1e-10
    assert abs(app.anmf_statistic(3.7j * y, p, mat) - base) < 1e-12
    assert abs(app.anmf_statistic(y, (1 - 2j) * p, mat) - base) < 1e-12
    # common diagonal unitary on everything
    d = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, size=4)))
    assert abs(app.anmf_statistic(d @ y, d @ p, d @ mat @ d.conj().T) - base) < 1e-12


def test_anmf_rejects_degenerate_inputs():
    with pytest.raises(ValueError):
        app.anmf_statistic(np.zeros(3), np.ones(3), np.eye(3))
    with pytest.raises(ValueError):
        app.anmf_statistic(np.ones(3), np.ones(4), np.eye(3))
