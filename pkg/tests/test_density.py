"""FFT density engine: convolution, scaling, smoothing, the mean-field map."""

import math
import warnings

import numpy as np
import pytest

from kavg import (
    GridDensity,
    GridSpec,
    TailTruncationWarning,
    equilibrium_density,
    equilibrium_variance,
    evolve_continuous,
    gaussian_density,
    gaussian_smooth,
    iterate_mean_field,
    laplace_density,
    mean_field_step,
    scale,
    self_convolve,
    tv_distance,
    uniform_density,
)


@pytest.fixture(scope="module")
def grid():
    return GridSpec.default()


@pytest.fixture(scope="module")
def lap(grid):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailTruncationWarning)
        return laplace_density(grid)


class TestSelfConvolve:
    def test_k1_identity(self, grid):
        rho = gaussian_density(grid, 0.04)
        out = self_convolve(rho, 1)
        assert out.grid == rho.grid
        assert np.array_equal(out.values, rho.values)

    def test_uniform_k2_is_triangle(self, grid):
        # analytic oracle: conv of 1/2 on [-1,1] with itself is (2-|x|)/4
        conv = self_convolve(uniform_density(grid, 1.0), 2)
        x = conv.grid.x()
        assert conv.grid.half_width == 8.0 and conv.grid.points == 2 * grid.points
        j0 = int(np.argmin(np.abs(x)))
        assert conv.values[j0] == pytest.approx(0.5, abs=1e-3)
        triangle = np.clip(2.0 - np.abs(x), 0.0, None) / 4.0
        assert conv.grid.dx * np.abs(conv.values - triangle).sum() < 1e-4

    @pytest.mark.parametrize("K", [2, 3, 5, 8])
    def test_gaussian_variance_additivity(self, grid, K):
        s2 = 0.03
        conv = self_convolve(gaussian_density(grid, s2), K)
        assert abs(conv.variance() - K * s2) < 1e-8

    def test_mass_unit(self, grid):
        conv = self_convolve(uniform_density(grid, 1.0), 3)
        assert abs(conv.mass() - 1.0) < 1e-10

    def test_k_validation(self, grid):
        with pytest.raises(ValueError):
            self_convolve(uniform_density(grid, 1.0), 0)


class TestScale:
    def test_identity(self, grid):
        rho = gaussian_density(grid, 0.04)
        out = scale(rho, 1.0)
        assert np.allclose(out.values, rho.values, atol=1e-14)

    def test_a2_quarters_variance(self, grid):
        rho = gaussian_density(grid, 0.04)
        assert abs(scale(rho, 2.0).variance() - 0.01) < 1e-6

    @pytest.mark.parametrize("a", [0.5, 1.0, 1.7, 2.0, 3.0, math.sqrt(2)])
    def test_mass_preserved(self, grid, a):
        rho = gaussian_density(grid, 0.02)
        assert abs(scale(rho, a).mass() - 1.0) < 1e-10

    def test_interpolation_path_variance(self, grid):
        # non-integer factor forces linear interpolation
        rho = gaussian_density(grid, 0.04)
        out = scale(rho, 1.7)
        assert out.variance() == pytest.approx(0.04 / 1.7**2, rel=1e-6)

    def test_stride_restriction_from_extended_grid(self, grid):
        # the target-grid path used inside the mean-field step
        rho = gaussian_density(grid, 0.01)
        conv = self_convolve(rho, 5)
        back = scale(conv, 5, target=grid)
        assert back.grid == grid
        assert abs(back.variance() - 5 * 0.01 / 25) < 1e-8

    def test_invalid_factor(self, grid):
        with pytest.raises(ValueError):
            scale(gaussian_density(grid, 0.04), 0.0)


class TestGaussianSmooth:
    def test_variance_additivity(self, grid):
        out = gaussian_smooth(gaussian_density(grid, 0.04), 0.1)
        assert abs(out.variance() - 0.05) < 1e-8

    def test_narrowest_resolvable_gaussian_closure(self, grid):
        # smoothing the variance-(5dx)^2 Gaussian: result is the Gaussian of
        # summed variance, in L1 within 1e-6
        v0 = (5 * grid.dx) ** 2
        out = gaussian_smooth(gaussian_density(grid, v0), 0.1)
        target = gaussian_density(grid, v0 + 0.01)
        assert tv_distance(out, target) < 1e-6

    def test_mass_preserved(self, grid):
        out = gaussian_smooth(uniform_density(grid, 1.0), 0.1)
        assert abs(out.mass() - 1.0) < 1e-10

    def test_under_resolved_rejected(self):
        rho = gaussian_density(GridSpec(4.0, 256), 0.25)  # dx = 1/32
        with pytest.raises(ValueError, match="under-resolved"):
            gaussian_smooth(rho, 5 * rho.grid.dx / 2)


class TestMeanFieldStep:
    def test_equilibrium_is_fixed_point(self, grid):
        eq = equilibrium_density(grid, 5, 0.1)
        assert tv_distance(mean_field_step(eq, 5, 0.1), eq) < 1e-6

    def test_gaussian_maps_to_gaussian(self, grid):
        s2 = 0.09
        out = mean_field_step(gaussian_density(grid, s2), 5, 0.1)
        target = gaussian_density(grid, s2 / 5 + 0.01)
        assert tv_distance(out, target) < 1e-6

    def test_uniform_one_step_variance(self, grid):
        out = mean_field_step(uniform_density(grid, 1.0), 5, 0.1)
        assert out.variance() == pytest.approx(1.0 / 3.0 / 5.0 + 0.01, abs=1e-6)

    def test_mean_preserved(self, grid):
        rho = gaussian_density(grid, 0.02, mean=0.4)
        out = mean_field_step(rho, 5, 0.1)
        assert abs(out.mean() - 0.4) < 1e-8

    def test_variance_recursion_postcondition(self, lap, grid):
        out = mean_field_step(lap, 5, 0.1)
        assert abs(out.variance() - (lap.variance() / 5 + 0.01)) < 1e-8

    def test_k1_rejected(self, grid):
        with pytest.raises(ValueError):
            mean_field_step(uniform_density(grid, 1.0), 1, 0.1)

    def test_even_symmetry_preserved(self, grid):
        out = mean_field_step(uniform_density(grid, 1.0), 5, 0.1)
        v = out.values
        assert np.max(np.abs(v[1:] - v[:0:-1])) < 1e-10


class TestIterate:
    def test_zero_steps(self, grid):
        rho = uniform_density(grid, 1.0)
        out = iterate_mean_field(rho, 5, 0.1, 0)
        assert len(out) == 1 and out[0] is rho

    def test_variance_recursion_every_step(self, grid):
        iterates = iterate_mean_field(uniform_density(grid, 1.0), 5, 0.1, 12)
        v = [r.variance() for r in iterates]
        for n in range(12):
            assert abs(v[n + 1] - (v[n] / 5 + 0.01)) < 1e-8

    def test_relaxation_to_equilibrium(self, grid):
        # five steps from the uniform start land within 5e-3 of equilibrium
        eq = equilibrium_density(grid, 5, 0.1)
        iterates = iterate_mean_field(uniform_density(grid, 1.0), 5, 0.1, 5)
        l1_3 = tv_distance(iterates[3], eq)
        l1_5 = tv_distance(iterates[5], eq)
        assert l1_5 < 5e-3
        assert l1_5 < l1_3  # still relaxing between steps 3 and 5

    def test_negative_steps_rejected(self, grid):
        with pytest.raises(ValueError):
            iterate_mean_field(uniform_density(grid, 1.0), 5, 0.1, -1)


class TestEvolveContinuous:
    def test_lam_zero_constant(self, grid):
        rho = uniform_density(grid, 1.0)
        traj = evolve_continuous(rho, 5, 0.1, 0.0, 1.0, 0.1)
        assert len(traj) == 11
        assert all(np.array_equal(r.values, rho.values) for _, r in traj)

    def test_time_step_too_large(self, grid):
        with pytest.raises(ValueError, match="time step too large"):
            evolve_continuous(uniform_density(grid, 1.0), 5, 0.1, 2.0, 1.0, 0.06)

    def test_equilibrium_stationary(self, grid):
        eq = equilibrium_density(grid, 5, 0.1)
        traj = evolve_continuous(eq, 5, 0.1, 1.0, 5.0, 0.05)
        assert max(tv_distance(r, eq) for _, r in traj) < 1e-6

    def test_variance_ode_closed_form(self, grid):
        # taking second moments: v' = lam*(v/K + sigma^2 - v), so
        # v(t) = v_inf + (v0 - v_inf) * exp(-lam*(1 - 1/K)*t)
        K, sigma, lam, dt = 5, 0.1, 1.0, 0.02
        rho0 = gaussian_density(grid, 0.09)
        v_inf = equilibrium_variance(K, sigma)
        traj = evolve_continuous(rho0, K, sigma, lam, 3.0, dt)
        tol = 5 * lam * dt * abs(0.09 - v_inf)
        for t, rho in traj:
            v_exact = v_inf + (0.09 - v_inf) * math.exp(-lam * (1 - 1 / K) * t)
            assert abs(rho.variance() - v_exact) < tol

    def test_mixture_preserves_positivity_and_mass(self, grid):
        traj = evolve_continuous(uniform_density(grid, 1.0), 5, 0.1, 1.5, 1.0, 0.05)
        for _, rho in traj:
            assert rho.values.min() >= 0.0
            assert abs(rho.mass() - 1.0) < 1e-10
