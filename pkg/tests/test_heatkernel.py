import numpy as np
import pytest

from pathrep.heatkernel import (
    KernelError,
    chapman_kolmogorov_circle,
    chapman_kolmogorov_so3,
    circle_fourier_kernel,
    circle_increment_gof,
    fit_so3_eigenvalues,
    haar_normalization,
    make_heat_kernel,
    so3_angle,
    so3_character,
    wrapped_gaussian,
)
from pathrep.liegroup import make_group

SO3 = make_group("special-orthogonal", n=3)
TORUS = make_group("torus", k=1)


def test_fitted_eigenvalues_match_casimir_spectrum():
    eigs, spreads = fit_so3_eigenvalues(SO3, 6)
    expected = np.array([l * (l + 1) for l in range(7)], dtype=float)
    assert np.max(np.abs(eigs - expected)) < 1e-4
    assert np.max(spreads) < 1e-4


def test_character_dimensions():
    for ell in range(5):
        assert so3_character(ell, np.array(0.0)) == pytest.approx(2 * ell + 1)


def test_wrapped_gaussian_matches_fourier_series():
    theta = np.linspace(-np.pi, np.pi, 13)
    for t in (0.05, 0.3, 1.0, 3.0):
        assert np.max(np.abs(wrapped_gaussian(theta, t) - circle_fourier_kernel(theta, t))) < 1e-12


def test_normalization_against_haar():
    assert haar_normalization(make_heat_kernel(TORUS), 0.4) == pytest.approx(1.0, abs=1e-12)
    model = make_heat_kernel(SO3)
    for t in (0.1, 0.5, 2.0):
        assert haar_normalization(model, t) == pytest.approx(1.0, abs=1e-10)


def test_kernel_symmetry_and_positivity():
    model = make_heat_kernel(SO3)
    g = SO3.exp(np.array([0.5, -0.3, 0.8]))
    assert model.eval(0.5, g) == pytest.approx(model.eval(0.5, g.T), abs=1e-12)
    theta = np.linspace(0, np.pi, 50)
    assert np.all(model.eval_angle(0.3, theta) > -1e-10)


def test_chapman_kolmogorov():
    conv, ref = chapman_kolmogorov_circle(0.3, 0.4, 1.1)
    assert conv == pytest.approx(ref, abs=1e-10)
    model = make_heat_kernel(SO3)
    x = SO3.exp(np.array([0.4, -0.2, 0.7]))
    conv, ref = chapman_kolmogorov_so3(model, 0.3, 0.45, x)
    assert conv == pytest.approx(ref, abs=1e-8)


def test_spectral_truncation_guard():
    model = make_heat_kernel(SO3, truncation=3)
    with pytest.raises(KernelError):
        model.eval_angle(0.05, np.array([1.0]))
    with pytest.raises(KernelError):
        model.eval(0.0, SO3.exp(np.zeros(3)))


def test_trace_moment_from_kernel():
    # E[tr g_t] = 3 exp(-t) for the unit-speed process
    model = make_heat_kernel(SO3, truncation=12)
    x, w = np.polynomial.legendre.leggauss(200)
    theta = 0.5 * np.pi * (x + 1.0)
    wts = 0.5 * np.pi * w
    dens = model.eval_angle(1.0, theta)
    est = np.sum((1 + 2 * np.cos(theta)) * dens * (1 - np.cos(theta)) / np.pi * wts)
    assert est == pytest.approx(3 * np.exp(-1.0), abs=1e-5)


def test_fdd_log_density_flat():
    model = make_heat_kernel(SO3, variant="flat-gaussian")
    pts = [np.zeros(3), np.zeros(3)]
    val = model.fdd_log_density([0.5, 1.0], pts)
    ref = -1.5 * np.log(2 * np.pi * 0.5) - 1.5 * np.log(2 * np.pi * 0.5)
    assert val == pytest.approx(ref, abs=1e-12)


def test_gof_accepts_true_model_and_rejects_wrong_scale():
    rng = np.random.default_rng(3)
    part = np.array([0.5, 1.0])
    incs = rng.standard_normal((20000, 2)) * np.sqrt(0.5)
    angles = np.cumsum(incs, axis=1)
    good = circle_increment_gof(angles, part, 1.0)
    assert good.p_value > 0.01
    bad = circle_increment_gof(1.5 * angles, part, 1.0)
    assert bad.p_value < 1e-6


def test_so3_angle():
    g = SO3.exp(np.array([0.0, 0.0, 1.3]))
    assert so3_angle(g) == pytest.approx(1.3, abs=1e-12)
