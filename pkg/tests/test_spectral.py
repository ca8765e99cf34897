import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lcflow.fields import Grid2D
from lcflow.spectral import (
    bernstein_check,
    bump,
    dealiased_product,
    divergence,
    fractional_laplacian,
    gradient,
    laplacian,
    leray_project,
    lp_band,
    lp_high,
    lp_low,
    parseval_norm_sq,
    smooth_step,
    spectral_divergence_norm,
    to_physical,
    to_spectral,
)

seeds = st.integers(0, 2**31 - 1)


def random_field(seed, shape):
    return np.random.default_rng(seed).standard_normal(shape)


class TestTransforms:
    def test_constant_has_unit_zero_mode(self, grid32):
        c = to_spectral(grid32, np.ones((32, 32)))
        assert c.coeffs[0, 0] == pytest.approx(1.0)
        assert np.abs(c.coeffs).sum() == pytest.approx(1.0)

    def test_single_mode_coefficient(self):
        g = Grid2D(16, 3.0)
        x1, x2 = g.coords
        f = np.cos(2 * np.pi * (2 * x1 + 3 * x2) / 3.0)
        c = to_spectral(g, f).coeffs
        assert c[2, 3] == pytest.approx(0.5)
        assert c[-2, -3] == pytest.approx(0.5)

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_round_trip_and_parseval(self, seed):
        g = Grid2D(32, 7.0)
        f = random_field(seed, (32, 32))
        c = to_spectral(g, f)
        assert np.max(np.abs(to_physical(c) - f)) < 1e-12
        direct = g.cell_area * np.sum(f**2)
        assert parseval_norm_sq(c) == pytest.approx(direct, rel=1e-12)


class TestDerivatives:
    def test_gradient_of_trig_field(self):
        g = Grid2D(32, 2 * np.pi)
        x1, x2 = g.coords
        f = np.sin(3 * x1) * np.cos(2 * x2)
        gr = gradient(g, f)
        assert np.max(np.abs(gr[0] - 3 * np.cos(3 * x1) * np.cos(2 * x2))) < 1e-12
        assert np.max(np.abs(gr[1] + 2 * np.sin(3 * x1) * np.sin(2 * x2))) < 1e-12

    def test_laplacian_eigenfunction(self):
        g = Grid2D(32, 4.0)
        x1, x2 = g.coords
        k = 2 * np.pi / 4.0
        f = np.cos(k * x1 + 2 * k * x2)
        assert np.max(np.abs(laplacian(g, f) + 5 * k**2 * f)) < 1e-11

    def test_fractional_laplacian_order_two_is_minus_laplacian(self, grid32):
        f = random_field(3, (32, 32))
        assert np.allclose(fractional_laplacian(grid32, f, 2.0), -laplacian(grid32, f), atol=1e-10)

    def test_fractional_laplacian_rejects_nonpositive(self, grid32):
        with pytest.raises(ValueError):
            fractional_laplacian(grid32, np.zeros((32, 32)), 0.0)

    def test_component_axes(self, grid32):
        f = random_field(4, (3, 32, 32))
        assert gradient(grid32, f).shape == (2, 3, 32, 32)


class TestLeray:
    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_idempotent_divergence_free_self_adjoint(self, seed):
        g = Grid2D(32, 5.0)
        v = random_field(seed, (2, 32, 32))
        w = random_field(seed + 1, (2, 32, 32))
        pv = leray_project(g, v)
        assert np.max(np.abs(leray_project(g, pv) - pv)) < 1e-12
        assert spectral_divergence_norm(g, pv) < 1e-11
        assert np.sum(pv * w) == pytest.approx(np.sum(v * leray_project(g, w)), abs=1e-10)

    def test_gradient_fields_are_removed(self, grid32):
        phi = random_field(5, (32, 32))
        grad = gradient(grid32, phi)
        assert np.max(np.abs(leray_project(grid32, grad))) < 1e-12

    def test_divergence_of_curl_vanishes(self, grid32):
        psi = random_field(6, (32, 32))
        gr = gradient(grid32, psi)
        u = np.stack([-gr[1], gr[0]])
        assert np.max(np.abs(divergence(grid32, u))) < 1e-11


class TestLittlewoodPaley:
    def test_bump_profile(self):
        r = np.array([0.0, 1.0, 1.5, 2.0, 3.0])
        b = bump(r)
        assert b[0] == 1.0 and b[1] == 1.0 and b[3] == 0.0 and b[4] == 0.0
        assert 0 < b[2] < 1

    def test_smooth_step_monotone(self):
        t = np.linspace(-0.5, 1.5, 401)
        s = smooth_step(t)
        assert np.all(np.diff(s) >= 0)
        assert smooth_step(np.array(0.5)) == pytest.approx(0.5)

    @settings(max_examples=25, deadline=None)
    @given(seeds, st.floats(0.1, 20.0))
    def test_partition_of_identity(self, seed, beta):
        g = Grid2D(32, 2 * np.pi)
        f = random_field(seed, (32, 32))
        assert np.max(np.abs(lp_low(g, f, beta) + lp_high(g, f, beta) - f)) < 1e-12

    def test_band_is_difference_of_lows(self, grid32):
        f = random_field(7, (32, 32))
        band = lp_band(grid32, f, 1.0, 4.0)
        assert np.allclose(band, lp_low(grid32, f, 4.0) - lp_low(grid32, f, 1.0), atol=1e-13)

    def test_band_requires_order(self, grid32):
        with pytest.raises(ValueError):
            lp_band(grid32, np.zeros((32, 32)), 2.0, 1.0)

    def test_low_pass_keeps_low_modes(self, grid32):
        x1, _ = grid32.coords
        f = np.cos(x1) + np.cos(9 * x1)
        assert np.allclose(lp_low(grid32, f, 2.0), np.cos(x1), atol=1e-13)

    def test_bernstein_validates_exponents(self, grid32):
        with pytest.raises(ValueError):
            bernstein_check(grid32, np.ones((32, 32)), 2.0, 4.0, 2.0)


class TestDealiasing:
    def test_resolved_product_is_exact(self):
        g = Grid2D(32, 2 * np.pi)
        x1, x2 = g.coords
        a = np.cos(5 * x1) * np.sin(3 * x2)
        b = np.sin(7 * x1 + 2 * x2)
        assert np.max(np.abs(dealiased_product(g, a, b) - a * b)) < 1e-13

    def test_aliased_modes_are_dropped(self):
        g = Grid2D(16, 2 * np.pi)
        x1, _ = g.coords
        a = np.cos(6 * x1)
        # cos(6x)^2 = 1/2 + cos(12x)/2; mode 12 is beyond the grid and must not fold back to 4
        assert np.allclose(dealiased_product(g, a, a), 0.5, atol=1e-13)
