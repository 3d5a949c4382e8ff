"""Brute-force enumeration and exact endpoint densities at desk scale."""

import math
from itertools import product

import numpy as np
import pytest
from numpy.testing import assert_allclose

import semiflex.oracle as oracle_mod
from semiflex.gaussian import exact_boundary_density
from semiflex.model import GaussianPotential, ModelParams, TabulatedPotential
from semiflex.oracle import (
    EnumerationSpec,
    enumerate_configs,
    gaussian_functional_density,
    mapped_boundary_density,
)

ZERO_POT = TabulatedPotential(np.array([-1.0, 0.0, 1.0]), np.zeros(3))


def _params(n, eps=1.0, mode="discrete"):
    return ModelParams(n_sites=n, epsilon=eps, macro_length=n * eps, height_mode=mode)


def test_partition_sum_flat_weights():
    # zero potential on {-1,0,1}: every tuple has weight 1, so Z = 3^N
    spec = EnumerationSpec(_params(2), ZERO_POT, support=(-1.0, 0.0, 1.0))
    assert enumerate_configs(spec).z == pytest.approx(9.0, abs=1e-14)


def test_partition_sum_gaussian_weights():
    # per-site weights 1 + 2 e^{-1}, independent across sites
    spec = EnumerationSpec(_params(2), GaussianPotential(kappa=2.0), support=(-1.0, 0.0, 1.0))
    assert enumerate_configs(spec).z == pytest.approx((1.0 + 2.0 * math.exp(-1.0)) ** 2,
                                                      rel=1e-14)


def test_bridge_event_probability():
    # flat weights, N=2: the only (phi_2, phi_3) = (0, 0) tuple is the flat one
    spec = EnumerationSpec(_params(2), ZERO_POT, support=(-1.0, 0.0, 1.0))
    result = enumerate_configs(
        spec,
        event=lambda phi: (phi[:, 2] == 0.0) & (phi[:, 3] == 0.0),
        statistic=lambda phi: phi[:, 1],
    )
    assert result.probability == pytest.approx(1.0 / 9.0, abs=1e-15)
    assert result.conditional_mean == pytest.approx(0.0, abs=1e-15)


def test_enumeration_against_plain_loop():
    # independent in-test reference: plain nested loops, no numpy
    params = _params(3)
    pot = GaussianPotential(kappa=1.0)
    support = (-1.0, 0.0, 1.0)
    z_ref, ev_ref, st_ref = 0.0, 0.0, 0.0
    for laps in product(support, repeat=3):
        w = math.exp(-sum(0.5 * l * l for l in laps))
        xi = [0.0]
        for l in laps:
            xi.append(xi[-1] + l)
        phi = [0.0]
        for x in xi:
            phi.append(phi[-1] + x)
        z_ref += w
        if phi[4] >= 0.0:
            ev_ref += w
            st_ref += w * phi[2]
    spec = EnumerationSpec(params, pot, support=support)
    result = enumerate_configs(
        spec,
        event=lambda phi: phi[:, 4] >= 0.0,
        statistic=lambda phi: phi[:, 2],
    )
    assert result.z == pytest.approx(z_ref, rel=1e-14)
    assert result.probability == pytest.approx(ev_ref / z_ref, rel=1e-14)
    assert result.conditional_mean == pytest.approx(st_ref / ev_ref, rel=1e-14)


def test_enumeration_chunking_invariance(monkeypatch):
    # tiny chunks force the outer/inner split; sums must not move
    spec = EnumerationSpec(_params(5), GaussianPotential(1.0), support=(-1.0, 0.0, 1.0))
    event = lambda phi: np.abs(phi[:, 3]) <= 1.0
    stat = lambda phi: phi[:, 2] ** 2
    base = enumerate_configs(spec, event=event, statistic=stat)
    monkeypatch.setattr(oracle_mod, "_CHUNK", 7)
    small = enumerate_configs(spec, event=event, statistic=stat)
    assert small.z == base.z
    assert small.probability == base.probability
    assert small.conditional_mean == base.conditional_mean


def test_enumeration_xi1_offset():
    # phi_1 = xi1 identically, whatever the laps do
    spec = EnumerationSpec(_params(2), ZERO_POT, support=(-1.0, 0.0, 1.0), xi1=0.5)
    result = enumerate_configs(spec, statistic=lambda phi: phi[:, 1])
    assert result.conditional_mean == pytest.approx(0.5, abs=1e-15)


def test_enumeration_guards():
    with pytest.raises(ValueError):
        EnumerationSpec(_params(9, mode="continuous"), ZERO_POT, support=(-1.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        EnumerationSpec(_params(2), ZERO_POT, support=())


def test_no_statistic_gives_nan():
    spec = EnumerationSpec(_params(2), ZERO_POT, support=(-1.0, 0.0, 1.0))
    assert math.isnan(enumerate_configs(spec).conditional_mean)


def test_functional_density_frozen_value():
    # N=3, sigma2=1: det = 3 * 7/8 - 1.5^2 = 0.375
    value = gaussian_functional_density(3, 1.0, 0.0, 0.0)
    assert value == pytest.approx(1.0 / (2.0 * math.pi * math.sqrt(0.375)), rel=1e-14)
    assert value == pytest.approx(0.2598989, abs=5e-8)


def test_functional_density_normalizes():
    # integrate the bivariate normal over a wide box
    n, sigma2 = 3, 1.0
    xs = np.linspace(-12, 12, 481)
    ys = np.linspace(-8, 8, 481)
    grid_x, grid_y = np.meshgrid(xs, ys, indexing="ij")
    dens = gaussian_functional_density(n, sigma2, grid_x, grid_y)
    total = np.trapezoid(np.trapezoid(dens, ys, axis=1), xs)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_functional_density_moments():
    # second moments of the density match the stated covariance
    n, sigma2 = 4, 0.5
    xs = np.linspace(-15, 15, 601)
    ys = np.linspace(-10, 10, 601)
    grid_x, grid_y = np.meshgrid(xs, ys, indexing="ij")
    dens = gaussian_functional_density(n, sigma2, grid_x, grid_y)

    def moment(values):
        return float(np.trapezoid(np.trapezoid(values * dens, ys, axis=1), xs))

    assert moment(grid_x * grid_x) == pytest.approx(n * sigma2, rel=1e-5)
    assert moment(grid_x * grid_y) == pytest.approx(0.5 * n * sigma2, rel=1e-5)
    assert moment(grid_y * grid_y) == pytest.approx(
        n * (2 * n + 1) * sigma2 / (6.0 * (n + 1)), rel=1e-5)


def test_mapped_density_constant_ratio():
    # the closed form takes slopes in standardized step units (a factor
    # sqrt(N) at kappa = c = 1); after that conversion the two densities
    # differ by the constant N^2 / (c (N+1)) at every slope pair
    for n in (3, 5, 10):
        for c in (1.0, 2.0):
            root = math.sqrt(n)
            ratios = [
                mapped_boundary_density(n, 1.0, c, root * xl, root * xr)
                / exact_boundary_density(n, 1.0, c, xl, xr)
                for xl, xr in ((0.0, 0.0), (0.02, -0.01), (0.05, 0.05), (0.3, 0.2))
            ]
            assert_allclose(ratios, n * n / (c * (n + 1)), rtol=1e-12)
