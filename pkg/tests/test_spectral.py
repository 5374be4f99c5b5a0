import math

import numpy as np
import pytest

from activeflow import (
    Field3,
    SingleModeData,
    compute_p,
    compute_rho,
    dealias,
    deriv,
    forward,
    inverse,
    laplacian_xi,
    make_grid,
    make_initial,
    poincare_constant,
)
from activeflow.spectral import deriv2, grad_l2, l2_norm, mode_energy
from conftest import field_from, random_field

TWO_PI = 2.0 * math.pi


class TestTransforms:
    def test_constant_concentrates_at_zero_mode(self, grid8):
        s = forward(Field3(grid=grid8, values=np.full(grid8.shape, 2.5)))
        assert s.coeffs[0, 0, 0] == pytest.approx(2.5, rel=1e-14)
        rest = np.abs(s.coeffs).sum() - abs(s.coeffs[0, 0, 0])
        assert rest < 1e-13

    def test_cosine_splits_into_conjugate_pair(self, grid32):
        f = field_from(grid32, lambda x1, x2, th: np.cos(x1))
        s = forward(f)
        assert s.coeffs[1, 0, 0] == pytest.approx(0.5, abs=1e-14)
        assert s.coeffs[-1, 0, 0] == pytest.approx(0.5, abs=1e-14)

    def test_zero_mode_is_grid_mean(self, grid8):
        f = random_field(grid8, seed=1)
        assert forward(f).coeffs[0, 0, 0].real == pytest.approx(f.mean(), abs=1e-15)

    def test_round_trip_random(self, grid8):
        f = random_field(grid8, seed=7)
        g = inverse(forward(f))
        scale = np.abs(f.values).max()
        assert np.abs(g.values - f.values).max() <= 1e-12 * scale

    def test_parseval(self, grid16):
        f = random_field(grid16, seed=3)
        grid_norm_sq = l2_norm(f) ** 2
        mode_norm_sq = float(mode_energy(forward(f)).sum())
        assert mode_norm_sq == pytest.approx(grid_norm_sq, rel=1e-12)


class TestDeriv:
    def test_sin_x1(self, grid32):
        f = field_from(grid32, lambda x1, x2, th: np.sin(x1))
        expected = field_from(grid32, lambda x1, x2, th: np.cos(x1))
        assert np.abs(deriv(f, "x1").values - expected.values).max() < 1e-12

    def test_theta_axis(self, grid32):
        f = field_from(grid32, lambda x1, x2, th: np.sin(2 * th))
        expected = field_from(grid32, lambda x1, x2, th: 2 * np.cos(2 * th))
        assert np.abs(deriv(f, "theta").values - expected.values).max() < 1e-12

    def test_nyquist_mode_derivative_is_zero(self, grid8):
        f = field_from(grid8, lambda x1, x2, th: np.cos(4 * x1))
        assert np.abs(deriv(f, "x1").values).max() < 1e-13

    def test_unknown_axis(self, grid8):
        with pytest.raises(ValueError):
            deriv(random_field(grid8, 0), "x3")

    def test_product_rule_bandlimited(self, grid32):
        f = field_from(grid32, lambda x1, x2, th: np.sin(3 * x1) + np.cos(2 * th))
        g = field_from(grid32, lambda x1, x2, th: np.cos(4 * x2 + 2 * x1))
        prod = Field3(grid=grid32, values=f.values * g.values)
        lhs = deriv(prod, "x1").values
        rhs = f.values * deriv(g, "x1").values + g.values * deriv(f, "x1").values
        assert np.abs(lhs - rhs).max() < 1e-10

    def test_rho_commutes_with_spatial_derivative(self, grid16):
        f = random_field(grid16, seed=11)
        lhs = compute_rho(deriv(f, "x1"))
        rhs = deriv2(compute_rho(f), "x1")
        assert np.abs(lhs.values - rhs.values).max() < 1e-12


class TestLaplacian:
    def test_theta_eigenfunction_ignores_de(self, grid32):
        f = field_from(grid32, lambda x1, x2, th: np.cos(th))
        out = laplacian_xi(f, de=5.0)
        assert np.abs(out.values + f.values).max() < 1e-12

    def test_spatial_eigenfunction_scales_with_de(self, grid32):
        f = field_from(grid32, lambda x1, x2, th: np.cos(x1))
        out = laplacian_xi(f, de=2.0)
        assert np.abs(out.values + 2.0 * f.values).max() < 1e-12


class TestDealias:
    def test_threshold_strict_floor(self, grid32):
        kept = field_from(grid32, lambda x1, x2, th: np.cos(10 * x1))
        zeroed = field_from(grid32, lambda x1, x2, th: np.cos(11 * x1))
        assert np.abs(inverse(dealias(forward(kept))).values - kept.values).max() < 1e-12
        assert np.abs(inverse(dealias(forward(zeroed))).values).max() < 1e-13

    def test_constant_unchanged(self, grid8):
        f = Field3(grid=grid8, values=np.full(grid8.shape, 3.0))
        assert np.abs(inverse(dealias(forward(f))).values - 3.0).max() < 1e-13

    def test_idempotent(self, grid16):
        s = forward(random_field(grid16, seed=2))
        once = dealias(s)
        twice = dealias(once)
        assert np.array_equal(once.coeffs, twice.coeffs)


class TestAngleMoments:
    def test_rho_of_constant(self, grid16):
        f = Field3(grid=grid16, values=np.full(grid16.shape, 1.0 / TWO_PI**3))
        rho = compute_rho(f)
        assert np.allclose(rho.values, 1.0 / TWO_PI**2, rtol=1e-13)

    def test_rho_kills_pure_cosine(self, grid16):
        f = field_from(grid16, lambda x1, x2, th: np.sin(x1) * np.cos(th))
        assert np.abs(compute_rho(f).values).max() < 1e-14

    def test_rho_single_mode_closed_form(self, grid32):
        f0 = make_initial(SingleModeData(m=1.0, epsilon=0.1, mode=(1, 0, 0)), grid32)
        x = grid32.x_values()
        expected = (1.0 + 0.1 * np.cos(x))[:, None] / TWO_PI**2 * np.ones((32, 32))
        assert np.abs(compute_rho(f0).values - expected).max() < 1e-15

    def test_p_of_theta_independent_field(self, grid16):
        f = field_from(grid16, lambda x1, x2, th: 1.0 + 0.3 * np.cos(x1))
        p1, p2 = compute_p(f)
        assert np.abs(p1.values).max() < 1e-14
        assert np.abs(p2.values).max() < 1e-14

    def test_p_of_lifted_cosine(self, grid16):
        f = field_from(grid16, lambda x1, x2, th: (1.0 + np.cos(th)) / TWO_PI)
        p1, p2 = compute_p(f)
        assert np.allclose(p1.values, 0.5, atol=1e-14)
        assert np.abs(p2.values).max() < 1e-14

    def test_polarization_bounded_by_density(self, grid8):
        for seed in range(10):
            f = random_field(grid8, seed=seed, positive=True)
            rho = compute_rho(f)
            p1, p2 = compute_p(f)
            p_norm = np.hypot(p1.values, p2.values)
            assert (p_norm <= rho.values * (1 + 1e-13)).all()


class TestPoincare:
    def test_value_is_one(self):
        for nx, nt in ((4, 4), (8, 8), (32, 16)):
            assert poincare_constant(make_grid(nx, nt)) == pytest.approx(1.0, abs=1e-15)

    def test_lowest_mode_ratio(self, grid32):
        u = field_from(grid32, lambda x1, x2, th: np.cos(x1))
        assert l2_norm(u) / grad_l2(u) == pytest.approx(1.0, rel=1e-12)

    def test_higher_mode_ratio_smaller(self, grid32):
        u = field_from(grid32, lambda x1, x2, th: np.cos(2 * x1))
        ratio = l2_norm(u) / grad_l2(u)
        assert ratio == pytest.approx(0.5, rel=1e-12)
        assert ratio <= poincare_constant(grid32)
