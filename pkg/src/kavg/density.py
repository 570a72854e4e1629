"""Deterministic grid evolution of the mean-field averaging dynamics.

One step of the mean-field map sends a density rho to the law of
(X_1 + ... + X_K)/K + N(0, sigma^2) with X_i drawn i.i.d. from rho:
K-fold self-convolution, rescale by K, Gaussian smoothing.  Convolutions
are computed spectrally on a zero-padded grid of half-width K*L with the
same spacing, so the rescale is an exact stride-K restriction (K*x_j is a
node) and needs no interpolation.  Negative values from rounding are
clipped against a hard 1e-9 mass budget and the result renormalized.
"""

from __future__ import annotations

import numpy as np

from .grid import GridDensity, GridSpec, finalize_density

CLIP_BUDGET = 1e-9


def _centered_buffer(rho: GridDensity, n: int) -> np.ndarray:
    """Values reindexed so x=0 sits at index 0 (negative x wraps to the top).

    With this layout a product of DFTs is a circular convolution whose
    index directly encodes position, so no phase bookkeeping is needed.
    """
    m = rho.grid.points
    buf = np.zeros(n)
    signed = np.arange(m) - m // 2  # x_j = signed * dx
    buf[signed % n] = rho.values
    return buf


def _from_centered(buf: np.ndarray) -> np.ndarray:
    """Back to ascending-x order on the symmetric grid."""
    return np.roll(buf, buf.shape[0] // 2)


def self_convolve(rho: GridDensity, K: int) -> GridDensity:
    """K-fold self-convolution on the extended grid (half-width K*L).

    The extended period 2*K*L contains the full support of a sum of K
    points from [-L, L), so the circular convolution is exact up to
    floating-point rounding.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if K == 1:
        return GridDensity(rho.grid, rho.values)
    n = K * rho.grid.points
    spec = np.fft.rfft(_centered_buffer(rho, n))
    conv = np.fft.irfft(spec**K, n) * rho.grid.dx ** (K - 1)
    ext = GridSpec(K * rho.grid.half_width, n)
    return finalize_density(ext, _from_centered(conv), clip_budget=CLIP_BUDGET)


def convolve(f: GridDensity, g: GridDensity) -> GridDensity:
    """Convolution of two densities with equal spacing, on the summed grid."""
    if abs(f.grid.dx - g.grid.dx) > 1e-15 * f.grid.dx:
        raise ValueError("convolve requires equal grid spacing")
    n = f.grid.points + g.grid.points
    spec = np.fft.rfft(_centered_buffer(f, n)) * np.fft.rfft(_centered_buffer(g, n))
    conv = np.fft.irfft(spec, n) * f.grid.dx
    ext = GridSpec(f.grid.half_width + g.grid.half_width, n)
    return finalize_density(ext, _from_centered(conv), clip_budget=CLIP_BUDGET)


def scale(rho: GridDensity, a: float, target: GridSpec | None = None) -> GridDensity:
    """The density x -> a * rho(a*x), renormalized on ``target``.

    Default target is the input grid.  When the sample points a*x_j land
    exactly on source nodes (integer a on matched grids, in particular the
    stride-K restriction after self_convolve) values are gathered without
    interpolation; otherwise linear interpolation is used.
    """
    if not a > 0:
        raise ValueError("scale factor must be positive")
    tgt = target if target is not None else rho.grid
    ratio = tgt.dx / rho.grid.dx
    # fractional source index of a*x_target, in exact node units
    f = a * ratio * (np.arange(tgt.points) - tgt.points // 2) + rho.grid.points // 2
    r = np.rint(f)
    if np.max(np.abs(f - r)) < 1e-9:
        idx = r.astype(np.int64)
        inside = (idx >= 0) & (idx < rho.grid.points)
        vals = np.where(inside, rho.values[np.clip(idx, 0, rho.grid.points - 1)], 0.0)
    else:
        vals = np.interp(f, np.arange(rho.grid.points), rho.values, left=0.0, right=0.0)
    return finalize_density(tgt, a * vals, clip_budget=CLIP_BUDGET)


def gaussian_smooth(rho: GridDensity, sigma: float) -> GridDensity:
    """Convolution with the centered Gaussian of standard deviation sigma.

    Spectral multiplication with the exact characteristic function
    exp(-sigma^2 xi^2 / 2); requires dx <= sigma/5 so the kernel is
    resolved.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if rho.grid.dx > sigma / 5.0:
        raise ValueError("under-resolved smoothing: grid spacing exceeds sigma/5")
    n = rho.grid.points
    xi = 2.0 * np.pi * np.fft.rfftfreq(n, d=rho.grid.dx)
    out = np.fft.irfft(np.fft.rfft(rho.values) * np.exp(-0.5 * (sigma * xi) ** 2), n)
    return finalize_density(rho.grid, out, clip_budget=CLIP_BUDGET)


def mean_field_step(rho: GridDensity, K: int, sigma: float) -> GridDensity:
    """One step of the mean-field evolution: smooth(rescale(convolve^K)).

    Preserves mass exactly and mean/variance recursions to ~1e-12:
    mean(out) = mean(in), var(out) = var(in)/K + sigma^2.
    """
    if K < 2:
        raise ValueError("mean-field step requires K >= 2")
    return gaussian_smooth(scale(self_convolve(rho, K), K, target=rho.grid), sigma)


def iterate_mean_field(
    rho0: GridDensity, K: int, sigma: float, n_steps: int
) -> list[GridDensity]:
    """Densities [rho_0, rho_1, ..., rho_n] under repeated mean-field steps."""
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    out = [rho0]
    for _ in range(n_steps):
        out.append(mean_field_step(out[-1], K, sigma))
    return out


def evolve_continuous(
    rho0: GridDensity,
    K: int,
    sigma: float,
    lam: float,
    t_end: float,
    dt: float,
) -> list[tuple[float, GridDensity]]:
    """Forward-Euler evolution of d rho/dt = lam * (step(rho) - rho).

    Uses the mixture form rho <- (1 - lam*dt) rho + lam*dt * step(rho),
    which is a convex combination of unit-mass nonnegative densities and
    therefore preserves nonnegativity and mass exactly.  Snapshots are
    recorded every dt, including t = 0.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if not dt > 0:
        raise ValueError("dt must be positive")
    if lam * dt > 0.1:
        raise ValueError("time step too large: lam*dt must not exceed 0.1")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    n = int(round(t_end / dt))
    out = [(0.0, rho0)]
    rho = rho0
    w = lam * dt
    for i in range(n):
        if w > 0:
            stepped = mean_field_step(rho, K, sigma)
            rho = GridDensity(rho.grid, (1.0 - w) * rho.values + w * stepped.values)
        out.append(((i + 1) * dt, rho))
    return out
