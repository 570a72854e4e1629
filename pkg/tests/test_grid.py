"""Grid and density types: invariants, constructors, CSV round trip."""

import numpy as np
import pytest

from kavg import (
    GridDensity,
    GridSpec,
    TailTruncationWarning,
    density_from_csv,
    density_to_csv,
    gaussian_density,
    laplace_density,
    point_density,
    uniform_density,
)
from kavg.grid import finalize_density


@pytest.fixture(scope="module")
def grid():
    return GridSpec.default()


class TestGridSpec:
    def test_default(self, grid):
        assert grid.half_width == 4.0
        assert grid.points == 16384
        assert grid.dx == pytest.approx(2 * 4.0 / 16384)

    def test_nodes(self):
        g = GridSpec(1.0, 256)
        x = g.x()
        assert x[0] == -1.0
        assert len(x) == 256
        assert x[-1] == pytest.approx(1.0 - g.dx)

    def test_rejects_small_or_odd(self):
        with pytest.raises(ValueError):
            GridSpec(1.0, 128)
        with pytest.raises(ValueError):
            GridSpec(1.0, 257)
        with pytest.raises(ValueError):
            GridSpec(-1.0, 256)

    def test_standard_requires_power_of_two(self):
        with pytest.raises(ValueError, match="power of two"):
            GridSpec.standard(4.0, 3 * 256)
        assert GridSpec.standard(4.0, 512).points == 512


class TestGridDensity:
    def test_rejects_negative(self, grid):
        v = np.full(grid.points, 1.0 / (2 * grid.half_width))
        v[3] = -1e-3
        with pytest.raises(ValueError, match="nonnegative"):
            GridDensity(grid, v)

    def test_rejects_wrong_mass(self, grid):
        v = np.full(grid.points, 1.0)
        with pytest.raises(ValueError, match="mass"):
            GridDensity(grid, v)

    def test_rejects_wrong_shape(self, grid):
        with pytest.raises(ValueError, match="shape"):
            GridDensity(grid, np.zeros(grid.points - 1))

    def test_values_read_only(self, grid):
        rho = uniform_density(grid, 1.0)
        with pytest.raises(ValueError):
            rho.values[0] = 1.0


class TestConstructors:
    def test_uniform_moments(self, grid):
        rho = uniform_density(grid, 1.0)
        assert abs(rho.mass() - 1.0) < 1e-12
        assert abs(rho.mean()) < 1e-12
        assert rho.variance() == pytest.approx(1.0 / 3.0, abs=1e-6)

    def test_gaussian_moments(self, grid):
        rho = gaussian_density(grid, 0.04, mean=0.25)
        assert rho.mean() == pytest.approx(0.25, abs=1e-10)
        assert rho.variance() == pytest.approx(0.04, abs=1e-10)

    def test_laplace_reports_truncation_and_is_centered(self, grid):
        with pytest.warns(TailTruncationWarning):
            rho = laplace_density(grid)
        assert abs(rho.mean()) < 1e-10
        # truncated to [-4, 4], so variance is below the untruncated value 2
        assert 1.5 < rho.variance() < 2.0

    def test_point_density(self, grid):
        rho = point_density(grid, at=0.5)
        assert abs(rho.mass() - 1.0) < 1e-12
        assert rho.mean() == pytest.approx(0.5, abs=grid.dx)
        assert np.count_nonzero(rho.values) == 1

    def test_uniform_outside_grid_rejected(self, grid):
        with pytest.raises(ValueError):
            uniform_density(grid, 5.0)


class TestFinalize:
    def test_clip_budget_enforced(self, grid):
        raw = np.full(grid.points, 1.0 / (2 * grid.half_width))
        raw[: grid.points // 4] = -1e-3  # clipped mass far above any budget
        from kavg import ConvolutionAccuracyError

        with pytest.raises(ConvolutionAccuracyError, match="refine grid"):
            finalize_density(grid, raw, clip_budget=1e-9)

    def test_small_negatives_clipped_and_renormalized(self, grid):
        raw = np.exp(-grid.x() ** 2 / 0.02)
        raw[0] = -1e-300
        rho = finalize_density(grid, raw, clip_budget=1e-9)
        assert rho.values[0] == 0.0
        assert abs(rho.mass() - 1.0) < 1e-12


class TestCsvRoundTrip:
    def test_exact_round_trip(self, grid, tmp_path):
        rho = gaussian_density(grid, 0.0125)
        path = tmp_path / "rho.csv"
        density_to_csv(rho, path, params={"K": 5, "sigma": 0.1})
        back = density_from_csv(path)
        assert back.grid == rho.grid
        assert np.array_equal(back.values, rho.values)

    def test_import_validates_nodes(self, grid, tmp_path):
        rho = gaussian_density(GridSpec(1.0, 512), 0.01)
        path = tmp_path / "rho.csv"
        density_to_csv(rho, path)
        text = path.read_text().replace("grid_half_width=1.0", "grid_half_width=2.0")
        path.write_text(text)
        with pytest.raises(ValueError):
            density_from_csv(path)

    def test_import_rejects_missing_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,value\n0.0,1.0\n")
        with pytest.raises(ValueError, match="grid header"):
            density_from_csv(path)
