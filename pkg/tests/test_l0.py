import numpy as np
import pytest

from spectralct.error_diagnostics import DimensionError
from spectralct.l0 import (
    GradientPair,
    L0Schedule,
    fft_quadratic_solve,
    gradient_l0_norm,
    hard_threshold,
    l0_energy,
    l0_smooth,
    periodic_gradients,
)


def _periodic_difference_matrices(shape):
    n = shape[0] * shape[1]
    dx = np.zeros((n, n))
    dy = np.zeros((n, n))
    for p in range(n):
        e = np.zeros(n)
        e[p] = 1.0
        gx, gy = periodic_gradients(e.reshape(shape))
        dx[:, p] = gx.ravel()
        dy[:, p] = gy.ravel()
    return dx, dy


def _step_image(size, height):
    image = np.zeros((size, size))
    image[:, size // 2:] = height
    return image


class TestGradientCount:
    def test_constant_image(self):
        assert gradient_l0_norm(np.full((10, 12), 3.2)) == 0

    @pytest.mark.parametrize("height", [0.1, 1.0, 10.0])
    def test_step_counts_one_column(self, height):
        assert gradient_l0_norm(_step_image(16, height)) == 16

    def test_single_pixel(self):
        image = np.zeros((9, 9))
        image[4, 4] = 1.0
        assert gradient_l0_norm(image) == 3

    def test_tolerance(self):
        assert gradient_l0_norm(_step_image(8, 1e-4), tol=1e-3) == 0

    def test_rejects_spectral_image(self):
        with pytest.raises(DimensionError):
            gradient_l0_norm(np.zeros((4, 4, 2)))


class TestHardThreshold:
    def test_tie_goes_to_zero(self):
        pair = hard_threshold(np.array([3.0]), np.array([4.0]), 25.0)
        assert pair.h[0] == 0.0 and pair.v[0] == 0.0

    def test_matches_brute_force(self, rng):
        gx, gy = rng.standard_normal((2, 100_000))
        threshold = 0.8
        pair = hard_threshold(gx, gy, threshold)
        keep_cost = np.full_like(gx, threshold)
        zero_cost = gx ** 2 + gy ** 2
        keep = keep_cost < zero_cost
        np.testing.assert_array_equal(pair.h, np.where(keep, gx, 0.0))
        np.testing.assert_array_equal(pair.v, np.where(keep, gy, 0.0))

    def test_negative_threshold(self):
        with pytest.raises(ValueError):
            hard_threshold(np.zeros(2), np.zeros(2), -1.0)


class TestQuadraticSolve:
    def test_exact_gradients_return_input(self, rng):
        w = rng.standard_normal((12, 10))
        gx, gy = periodic_gradients(w)
        np.testing.assert_allclose(fft_quadratic_solve(w, GradientPair(gx, gy), 7.0), w, atol=1e-12)

    def test_small_tau(self, rng):
        w = rng.standard_normal((8, 8))
        zeros = GradientPair(np.zeros_like(w), np.zeros_like(w))
        np.testing.assert_allclose(fft_quadratic_solve(w, zeros, 1e-10), w, atol=1e-8)

    def test_matches_dense_solve(self, rng):
        shape = (8, 8)
        dx, dy = _periodic_difference_matrices(shape)
        for _ in range(100):
            w, h, v = rng.standard_normal((3, *shape))
            tau = float(rng.uniform(0.01, 100.0))
            lhs = np.eye(64) + tau * (dx.T @ dx + dy.T @ dy)
            rhs = w.ravel() + tau * (dx.T @ h.ravel() + dy.T @ v.ravel())
            expected = np.linalg.solve(lhs, rhs).reshape(shape)
            np.testing.assert_allclose(fft_quadratic_solve(w, GradientPair(h, v), tau), expected, atol=1e-6)

    def test_rejects_nonpositive_tau(self):
        zeros = GradientPair(np.zeros((4, 4)), np.zeros((4, 4)))
        with pytest.raises(ValueError):
            fft_quadratic_solve(np.zeros((4, 4)), zeros, 0.0)


class TestL0Smooth:
    def test_zero_lambda_is_identity(self, rng):
        w = rng.standard_normal((16, 16))
        np.testing.assert_array_equal(l0_smooth(w, L0Schedule(lambda_star=0.0)), w)

    def test_clean_step_is_kept(self):
        w = _step_image(16, 1.0)
        np.testing.assert_allclose(l0_smooth(w, L0Schedule(lambda_star=1e-3)), w, atol=1e-10)

    def test_noise_is_flattened(self, rng):
        w = _step_image(32, 1.0) + 0.02 * rng.standard_normal((32, 32))
        before = gradient_l0_norm(w, tol=1e-3)
        after = gradient_l0_norm(l0_smooth(w, L0Schedule(lambda_star=0.05)), tol=1e-3)
        assert after < 0.25 * before

    def test_scale_covariance(self, rng):
        w = _step_image(16, 1.0) + 0.05 * rng.standard_normal((16, 16))
        sched = L0Schedule(lambda_star=0.02)
        np.testing.assert_allclose(l0_smooth(2.0 * w, sched.scaled(4.0)), 2.0 * l0_smooth(w, sched), rtol=1e-12, atol=1e-14)

    def test_scaled_keeps_initial_tau(self):
        sched = L0Schedule(lambda_star=0.1)
        scaled = sched.scaled(9.0)
        assert scaled.lambda_star == pytest.approx(0.9)
        assert scaled.initial_tau == sched.initial_tau

    def test_rejects_non_finite(self):
        w = np.zeros((4, 4))
        w[1, 1] = np.nan
        with pytest.raises(DimensionError):
            l0_smooth(w, L0Schedule(lambda_star=1.0))


def test_energy_counts_periodic_gradients():
    u = np.zeros((6, 6))
    u[2, 3] = 1.0
    assert l0_energy(u, u, 0.5) == pytest.approx(1.5)
    assert l0_energy(u, np.zeros((6, 6)), 0.0) == pytest.approx(1.0)
