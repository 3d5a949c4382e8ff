"""Closed-form Gaussian statistics: moments, limit kernel, endpoint density."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from semiflex.gaussian import (
    ConditionedSpec,
    GridTimes,
    conditional_gaussian,
    exact_boundary_density,
    matrix_from_csv,
    matrix_to_csv,
    q_matrix,
    sigma2_increment,
    theta_cov,
    theta_mean,
    xy_moments,
)
from semiflex.model import GaussianPotential, ModelParams, PowerLawPotential, TabulatedPotential


def test_sigma2_gaussian_closed_form():
    params = ModelParams(n_sites=100, epsilon=0.01, macro_length=1.0)
    assert sigma2_increment(GaussianPotential(kappa=1.0), params) == pytest.approx(100.0)
    assert sigma2_increment(GaussianPotential(kappa=4.0), params) == pytest.approx(25.0)


def test_sigma2_quadrature_matches_closed_form():
    # the power law with alpha = 2 is the same weight, but takes the quadrature path
    params = ModelParams(n_sites=50, epsilon=0.02, macro_length=1.0)
    exact = sigma2_increment(GaussianPotential(kappa=2.0), params)
    quad = sigma2_increment(PowerLawPotential(kappa=1.0, alpha=2.0), params)
    assert quad == pytest.approx(exact, rel=1e-9)


def test_sigma2_discrete_flat_support():
    # zero potential on {-1, 0, 1}: uniform increments, variance 2/3
    params = ModelParams(n_sites=4, epsilon=1.0, macro_length=4.0, height_mode="discrete")
    pot = TabulatedPotential(np.array([-1.0, 0.0, 1.0]), np.zeros(3))
    assert sigma2_increment(pot, params) == pytest.approx(2.0 / 3.0, abs=1e-14)


def test_sigma2_discrete_gaussian():
    params = ModelParams(n_sites=4, epsilon=1.0, macro_length=4.0, height_mode="discrete")
    sig2 = sigma2_increment(GaussianPotential(kappa=2.0), params)
    # direct lattice sum with a generous cutoff
    ks = np.arange(-60, 61)
    w = np.exp(-ks.astype(float) ** 2)
    assert sig2 == pytest.approx(float(np.sum(ks**2 * w) / np.sum(w)), rel=1e-12)


def test_xy_moments_frozen_values():
    assert_allclose(xy_moments(2, 3, 1.0), (2.0, 0.75, 0.3125))
    assert_allclose(xy_moments(3, 3, 1.0), (3.0, 1.5, 0.875))
    assert xy_moments(1, 3, 1.0)[2] == pytest.approx(1.0 / 16.0)
    with pytest.raises(ValueError):
        xy_moments(4, 3, 1.0)


def test_xy_moments_scale_with_sigma2():
    base = np.array(xy_moments(5, 9, 1.0))
    scaled = np.array(xy_moments(5, 9, 2.5))
    assert_allclose(scaled, 2.5 * base)


def test_q_matrix_endpoint_only():
    assert_allclose(q_matrix(GridTimes([])), [[1.0, 0.5], [0.5, 1.0 / 3.0]])


def test_q_matrix_midpoint():
    expect = [
        [1.0, 1.0 / 8.0, 1.0 / 2.0],
        [1.0 / 8.0, 1.0 / 24.0, 5.0 / 48.0],
        [1.0 / 2.0, 5.0 / 48.0, 1.0 / 3.0],
    ]
    assert_allclose(q_matrix([0.5]), expect, atol=1e-15)


def test_q_matrix_positive_definite():
    q = q_matrix(np.linspace(0.1, 0.9, 7))
    assert np.all(np.linalg.eigvalsh(q) > 0)


def test_grid_times_validation():
    with pytest.raises(ValueError):
        GridTimes([0.0, 0.5])
    with pytest.raises(ValueError):
        GridTimes([0.5, 0.25])


def test_theta_mean_frozen_values():
    assert theta_mean(0.5, ConditionedSpec(a=1.0, b=0.0)) == pytest.approx(-1.0 / 8.0)
    assert theta_mean(0.5, ConditionedSpec(a=0.0, b=1.0)) == pytest.approx(0.5)
    # pinned at both ends of [0, 1]
    spec = ConditionedSpec(a=0.7, b=-0.3)
    assert theta_mean(0.0, spec) == 0.0
    assert theta_mean(1.0, spec) == pytest.approx(spec.b)


def test_theta_cov_frozen_values():
    assert theta_cov(0.5, 0.5) == pytest.approx(1.0 / 192.0, abs=1e-16)
    assert theta_cov(0.25, 0.75) == pytest.approx(13.0 / 12288.0, abs=1e-16)
    assert theta_cov(0.75, 0.25) == pytest.approx(13.0 / 12288.0, abs=1e-16)
    # diagonal reduces to t^3 (1-t)^3 / 3
    ts = np.linspace(0.05, 0.95, 19)
    assert_allclose(theta_cov(ts, ts), ts**3 * (1 - ts) ** 3 / 3.0, atol=1e-15)


def test_conditional_gaussian_matches_polynomials():
    # Schur complement of the limit kernel must reproduce the closed forms
    times = np.array([0.2, 0.4, 0.6, 0.8])
    spec = ConditionedSpec(a=1.3, b=-0.4)
    mean, cov = conditional_gaussian(times, spec)
    assert_allclose(mean, theta_mean(times, spec), atol=1e-13)
    expect = np.array([[theta_cov(s, t) for t in times] for s in times])
    assert_allclose(cov, expect, atol=1e-13)


def test_conditional_gaussian_empty_times():
    mean, cov = conditional_gaussian(GridTimes([]), ConditionedSpec(1.0, 1.0))
    assert mean.shape == (0,)
    assert cov.shape == (0, 0)


def test_exact_boundary_density_frozen_value():
    # N=3, kappa=c=1, zero slopes: prefactor sqrt(24)/(18 pi)
    value = exact_boundary_density(3, 1.0, 1.0, 0.0, 0.0)
    assert value == pytest.approx(math.sqrt(24.0) / (18.0 * math.pi), rel=1e-14)
    with pytest.raises(ValueError):
        exact_boundary_density(1, 1.0, 1.0, 0.0, 0.0)


def test_exact_boundary_density_symmetry():
    # the quadratic form is symmetric under swapping the two slopes
    a = exact_boundary_density(6, 2.0, 1.5, 0.3, -0.1)
    b = exact_boundary_density(6, 2.0, 1.5, -0.1, 0.3)
    assert a == pytest.approx(b, rel=1e-15)
    # and any nonzero slope pair is exponentially suppressed
    assert a < exact_boundary_density(6, 2.0, 1.5, 0.0, 0.0)


def test_matrix_csv_roundtrip(tmp_path):
    q = q_matrix([0.25, 0.75])
    labels = ["w", "0.25", "0.75", "1"]
    target = tmp_path / "q.csv"
    matrix_to_csv(q, labels, target, comment="config=deadbeef")
    back, back_labels = matrix_from_csv(target)
    assert back_labels == labels
    assert_allclose(back, q, rtol=0, atol=0)
