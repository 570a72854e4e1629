"""Model parameters, reproducible random sources, Gaussian equilibrium.

The dynamics replace each particle by the mean of K uniformly sampled
particles plus centered Gaussian noise of standard deviation sigma.  For
K >= 2 the stationary law per coordinate is the centered Gaussian with
variance K*sigma^2/(K-1); the formulas here reject K = 1 (the variance
recursion v -> v/K + sigma^2 stops contracting) while the simulators
accept it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridDensity, GridSpec, finalize_density


@dataclass(frozen=True)
class ModelParams:
    """Simulation parameters.

    d      spatial dimension
    K      number of neighbors averaged per update
    sigma  noise standard deviation (position units)
    lam    per-particle Poisson rate (continuous-time model only)
    N      population size
    """

    d: int
    K: int
    sigma: float
    lam: float = 0.0
    N: int = 1

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be at least 1")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")


class RandomSource:
    """Counter-based random source keyed by (seed, stream).

    Identical (seed, stream) pairs reproduce identical sample sequences
    bit-for-bit; distinct streams are independent Philox keys.  Instances
    are stateful and single-owner: parallel work items each get their own
    stream, never a shared instance.
    """

    def __init__(self, seed: int, stream: int = 0):
        if not 0 <= seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if not 0 <= stream < 2**64:
            raise ValueError("stream must fit in 64 bits")
        self.seed = seed
        self.stream = stream
        self._gen = np.random.Generator(np.random.Philox(key=(stream << 64) | seed))

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, stream={self.stream})"

    def normal(self, scale: float = 1.0, size=None):
        return self._gen.normal(0.0, scale, size)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size)

    def exponential(self, scale: float, size=None):
        return self._gen.exponential(scale, size)

    def uniform(self, low: float, high: float, size=None):
        return self._gen.uniform(low, high, size)


def gaussian_noise(rng: RandomSource, d: int, sigma: float) -> np.ndarray:
    """One draw from N(0, sigma^2 I_d); consecutive calls are independent."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return rng.normal(scale=sigma, size=d)


def equilibrium_variance(K: int, sigma: float) -> float:
    """Stationary per-coordinate variance K*sigma^2/(K-1), defined for K >= 2."""
    if K < 2:
        raise ValueError("equilibrium undefined for K < 2")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return K * sigma * sigma / (K - 1)


def equilibrium_density(grid: GridSpec, K: int, sigma: float) -> GridDensity:
    """Stationary Gaussian sampled on the grid, unit discrete mass."""
    var = equilibrium_variance(K, sigma)
    if grid.half_width < 8.0 * math.sqrt(var):
        raise ValueError("equilibrium tail truncated: grid half-width below 8 sigma_inf")
    raw = np.exp(-grid.x() ** 2 / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)
    return finalize_density(grid, raw, tail_threshold=None)
