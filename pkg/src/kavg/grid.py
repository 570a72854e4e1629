"""Uniform 1-D grids and unit-mass densities sampled on them.

A grid covers [-L, L) with M equally spaced nodes x_j = -L + j*dx,
dx = 2L/M.  The half-open convention keeps FFT work free of a duplicated
endpoint.  Densities store node values; mass and moments are plain
Riemann sums weighted by dx, and every public operation hands back a
density renormalized to unit discrete mass.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MASS_TOL = 1e-10
TAIL_THRESHOLD = 1e-8
DENSITY_SCHEMA = "kavg.density.v1"


class TailTruncationWarning(UserWarning):
    """Density carries more mass near the grid edge than the tail budget."""


class ConvolutionAccuracyError(RuntimeError):
    """Clipped negative mass exceeded the spectral accuracy budget."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform symmetric grid on [-half_width, half_width).

    User-facing grids use a power-of-two node count (enforced by
    ``standard`` and the config loader).  Convolution results live on
    grids with K times the nodes at the same spacing, so the raw
    constructor only requires an even count of at least 256.
    """

    half_width: float
    points: int

    def __post_init__(self):
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError("grid half_width must be positive and finite")
        if self.points < 256 or self.points % 2 != 0:
            raise ValueError("grid needs an even node count of at least 256")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.points

    def x(self) -> np.ndarray:
        """Node coordinates -L + j*dx, j = 0..points-1."""
        return -self.half_width + self.dx * np.arange(self.points)

    @classmethod
    def standard(cls, half_width: float = 4.0, points: int = 1 << 14) -> "GridSpec":
        if not _is_pow2(points):
            raise ValueError("points must be a power of two")
        return cls(half_width, points)

    @classmethod
    def default(cls) -> "GridSpec":
        """Default grid: L = 4, M = 2**14 (dx ~ 4.9e-4)."""
        return cls.standard(4.0, 1 << 14)


@dataclass(frozen=True)
class GridDensity:
    """Nonnegative density with unit discrete mass on a GridSpec."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.points,):
            raise ValueError("values shape does not match grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite")
        if v.min() < 0:
            raise ValueError("density values must be nonnegative")
        mass = self.grid.dx * float(v.sum())
        if abs(mass - 1.0) > MASS_TOL:
            raise ValueError(f"density mass {mass!r} is not 1 within {MASS_TOL}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def mass(self) -> float:
        return self.grid.dx * float(self.values.sum())

    def mean(self) -> float:
        return self.grid.dx * float(np.dot(self.grid.x(), self.values))

    def variance(self) -> float:
        x = self.grid.x()
        m = self.mean()
        return self.grid.dx * float(np.dot((x - m) ** 2, self.values))

    def tail_mass(self, inner_fraction: float = 0.9) -> float:
        """Mass outside [-f*L, f*L]."""
        cut = inner_fraction * self.grid.half_width
        outside = np.abs(self.grid.x()) > cut
        return self.grid.dx * float(self.values[outside].sum())


def finalize_density(
    grid: GridSpec,
    raw: np.ndarray,
    clip_budget: float | None = None,
    tail_threshold: float | None = TAIL_THRESHOLD,
) -> GridDensity:
    """Clip negative ringing, renormalize, validate tails.

    clip_budget is the hard cap on clipped negative mass (spectral ops
    pass 1e-9); None skips the cap but still clips rounding dust.
    """
    raw = np.asarray(raw, dtype=np.float64)
    neg = raw < 0
    if neg.any():
        clipped = -grid.dx * float(raw[neg].sum())
        if clip_budget is not None and clipped > clip_budget:
            raise ConvolutionAccuracyError(
                f"convolution accuracy failure: refine grid "
                f"(clipped mass {clipped:.3e} > {clip_budget:.1e})"
            )
        raw = np.where(neg, 0.0, raw)
    total = grid.dx * float(raw.sum())
    if total <= 0:
        raise ValueError("density has no positive mass")
    rho = GridDensity(grid, raw / total)
    if tail_threshold is not None:
        t = rho.tail_mass()
        if t > tail_threshold:
            warnings.warn(
                f"tail mass {t:.3e} outside 90% of the grid exceeds "
                f"{tail_threshold:.1e}; density truncated by the grid",
                TailTruncationWarning,
                stacklevel=2,
            )
    return rho


def _recentered(grid: GridSpec, values: np.ndarray, target_mean: float) -> np.ndarray:
    """Drive the discrete mean exactly onto target by a multiplicative tilt.

    Sampling a symmetric density on the half-open grid leaves a tiny mean
    offset (the -L node has no +L partner).  Reweighting by the linear
    factor 1 - m*(x - mean)/var cancels the offset exactly, preserves mass
    exactly, and perturbs shape and higher moments only at O(offset^2) --
    unlike shifting, which smears mass across node boundaries.
    """
    x = grid.x()
    total = float(values.sum())
    mean = float(np.dot(x, values)) / total
    m = mean - target_mean
    if m == 0.0:
        return values
    var = float(np.dot((x - mean) ** 2, values)) / total
    tilt = 1.0 - m * (x - mean) / var
    if tilt.min() <= 0.0:
        raise ValueError("mean offset too large to recenter on this grid")
    return values * tilt


# ---------------------------------------------------------------------------
# Initial densities
# ---------------------------------------------------------------------------

def uniform_density(grid: GridSpec, a: float = 1.0) -> GridDensity:
    """Uniform density on [-a, a].

    Nodes exactly at +-a get half weight (trapezoid sampling of the
    indicator), which keeps the discrete moments O(dx^2)-close to the
    continuum ones.
    """
    if not 0 < a <= grid.half_width:
        raise ValueError("uniform half-width must lie inside the grid")
    ax = np.abs(grid.x())
    raw = np.where(ax <= a, 1.0, 0.0)
    raw[np.abs(ax - a) < 1e-12 * grid.half_width] = 0.5
    return finalize_density(grid, _recentered(grid, raw, 0.0))


def laplace_density(grid: GridSpec) -> GridDensity:
    """Two-sided exponential exp(-|x|)/2, truncated to the grid."""
    raw = 0.5 * np.exp(-np.abs(grid.x()))
    return finalize_density(grid, _recentered(grid, raw, 0.0))


def gaussian_density(grid: GridSpec, variance: float, mean: float = 0.0) -> GridDensity:
    if variance <= 0:
        raise ValueError("variance must be positive")
    raw = np.exp(-((grid.x() - mean) ** 2) / (2.0 * variance))
    return finalize_density(grid, _recentered(grid, raw, mean))


def point_density(grid: GridSpec, at: float = 0.0) -> GridDensity:
    """Unit mass concentrated on the grid node nearest to ``at``."""
    j = int(np.clip(round((at + grid.half_width) / grid.dx), 0, grid.points - 1))
    raw = np.zeros(grid.points)
    raw[j] = 1.0 / grid.dx
    return finalize_density(grid, raw, tail_threshold=None)


# ---------------------------------------------------------------------------
# CSV export / import
# ---------------------------------------------------------------------------

def density_to_csv(rho: GridDensity, path: str | Path, params: dict | None = None) -> None:
    """Write `x,value` rows with a comment header recording the grid."""
    lines = [
        f"# schema={DENSITY_SCHEMA}",
        f"# grid_half_width={rho.grid.half_width!r} grid_points={rho.grid.points}",
    ]
    if params:
        lines.append("# params=" + json.dumps(params, sort_keys=True))
    lines.append("x,value")
    x = rho.grid.x()
    for xi, vi in zip(x, rho.values):
        lines.append(f"{float(xi)!r},{float(vi)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def density_from_csv(path: str | Path) -> GridDensity:
    """Read a density written by density_to_csv and re-validate invariants."""
    half_width = None
    points = None
    xs, vs = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# grid_half_width="):
                    body = line[2:]
                    fields = dict(p.split("=", 1) for p in body.split())
                    half_width = float(fields["grid_half_width"])
                    points = int(fields["grid_points"])
                continue
            if line == "x,value":
                continue
            sx, sv = line.split(",")
            xs.append(float(sx))
            vs.append(float(sv))
    if half_width is None or points is None:
        raise ValueError("missing grid header in density CSV")
    if len(vs) != points:
        raise ValueError("density CSV row count does not match grid_points")
    grid = GridSpec(half_width, points)
    if not np.allclose(xs, grid.x(), atol=1e-12):
        raise ValueError("density CSV nodes do not match the declared grid")
    return GridDensity(grid, np.array(vs))
