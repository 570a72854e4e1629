"""Render experiment CSV outputs as PNG + SVG figures.

The renderer is a pure consumer of the experiment pipeline's CSV and
manifest files: it never imports the simulation package and never writes
into the input directory.  Output is deterministic for identical inputs
(SVG date metadata is stripped).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "kavg-figures"  # deterministic SVG ids

import matplotlib.pyplot as plt
import numpy as np

from .schemas import SchemaError, column, read_series

FIGURES = ("fig2", "fig4", "fig5", "poc", "w2", "continuous")

EQUILIBRIUM_CURVE_TOL = 1e-9


@dataclass(frozen=True)
class FigureJob:
    """One rendering job: which figure, from which CSV, into which directory."""

    input_csv: Path
    figure: str
    output: Path

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise ValueError(f"unknown figure {self.figure!r}")


def _load_manifest(input_csv: Path) -> dict:
    manifest = input_csv.parent / "manifest.json"
    if not manifest.exists():
        raise SchemaError(f"{manifest}: manifest.json not found next to the CSV")
    return json.loads(manifest.read_text())


def equilibrium_curve(manifest: dict) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian limit density on the manifest grid, unit discrete mass.

    Recomputed from the manifest parameters alone so the figure can be
    checked against the curve the pipeline wrote out.
    """
    k = int(manifest["params"]["K"])
    sigma = float(manifest["params"]["sigma"])
    half_width = float(manifest["grid"]["half_width"])
    points = int(manifest["grid"]["points"])
    if k < 2:
        raise ValueError("equilibrium needs K >= 2")
    var = k * sigma * sigma / (k - 1)
    dx = 2.0 * half_width / points
    x = -half_width + dx * np.arange(points)
    values = np.exp(-(x**2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)
    values /= dx * values.sum()
    return x, values


def _save(fig, out_dir: Path, name: str) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    png = out_dir / f"{name}.png"
    svg = out_dir / f"{name}.svg"
    fig.savefig(png, dpi=150)
    fig.savefig(svg, metadata={"Date": None})
    plt.close(fig)
    return [png, svg]


def _render_fig2(job: FigureJob) -> list[Path]:
    header, rows = read_series(job.input_csv, "fig2-samples")
    seeds = np.array([int(s) for s in column(header, rows, "seed")])
    coords = np.array([float(v) for v in column(header, rows, "coord0")])

    curve_path = job.input_csv.parent / "fig2_equilibrium.csv"
    ch, crows = read_series(curve_path, "density")
    cx = np.array([float(v) for v in column(ch, crows, "x")])
    cv = np.array([float(v) for v in column(ch, crows, "value")])

    manifest = _load_manifest(job.input_csv)
    rx, rv = equilibrium_curve(manifest)
    if len(rx) != len(cx) or np.max(np.abs(rv - cv)) > EQUILIBRIUM_CURVE_TOL:
        raise SchemaError(
            f"{curve_path}: embedded equilibrium curve deviates from the "
            f"manifest parameters by more than {EQUILIBRIUM_CURVE_TOL:.0e}"
        )

    # each seed's cloud is recentred (the ensemble mean random-walks)
    pooled = np.concatenate([coords[seeds == s] - coords[seeds == s].mean()
                             for s in np.unique(seeds)])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.hist(pooled, bins=80, density=True, color="#9ecae1",
            edgecolor="white", linewidth=0.3, label="particles (recentred)")
    keep = rv > rv.max() * 1e-6
    ax.plot(rx[keep], rv[keep], "r-", lw=1.8, label="Gaussian limit")
    ax.set_xlabel("position")
    ax.set_ylabel("density")
    ax.set_xlim(-0.5, 0.5)
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, job.output, "fig2")


def _render_fig4(job: FigureJob) -> list[Path]:
    header, rows = read_series(job.input_csv, "fig4")
    x = np.array([float(v) for v in column(header, rows, "x")])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    styles = {"rho0": ("g-", "initial"), "rho3": ("b-", "step 3"),
              "rho5": ("c--", "step 5"), "rho_inf": ("r-", "equilibrium")}
    for col, (style, label) in styles.items():
        y = np.array([float(v) for v in column(header, rows, col)])
        ax.plot(x, y, style, lw=1.4, label=label)
    ax.set_xlim(-1.5, 1.5)
    ax.set_xlabel("position")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, job.output, "fig4")


def _render_fig5(job: FigureJob) -> list[Path]:
    header, rows = read_series(job.input_csv, "fig5")
    steps = np.array([int(v) for v in column(header, rows, "step")])
    kl = np.array([float(v) for v in column(header, rows, "kl")])
    bound = np.array([float(v) for v in column(header, rows, "bound")])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    pos = kl > 0
    ax.semilogy(steps[pos], kl[pos], "bo-", ms=4, lw=1.2, label="relative entropy")
    ax.semilogy(steps, bound, "r--", lw=1.2, label="geometric bound (1/K per step)")
    ax.set_xlabel("step")
    ax.set_ylabel("relative entropy to equilibrium")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, job.output, "fig5")


def _render_poc(job: FigureJob) -> list[Path]:
    header, rows = read_series(job.input_csv, "poc")
    n = np.array([int(v) for v in column(header, rows, "N")])
    w2 = np.array([float(v) for v in column(header, rows, "w2")])
    sizes = np.unique(n)
    means = np.array([w2[n == s].mean() for s in sizes])
    slope, intercept = np.polyfit(np.log(sizes), np.log(means), 1)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.loglog(n, w2, "k.", ms=3, alpha=0.35, label="per-seed error")
    ax.loglog(sizes, means, "bo-", ms=5, lw=1.4, label="seed mean")
    ax.loglog(sizes, np.exp(intercept) * sizes**slope, "r--", lw=1.2,
              label=f"fit: slope {slope:.3f}")
    ax.set_xlabel("population N")
    ax.set_ylabel("Wasserstein-2 error")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, job.output, "poc")


def _render_w2(job: FigureJob) -> list[Path]:
    header, rows = read_series(job.input_csv, "w2")
    inits = column(header, rows, "init")
    ks = [int(v) for v in column(header, rows, "K")]
    steps = np.array([int(v) for v in column(header, rows, "step")])
    w2sq = np.array([float(v) for v in column(header, rows, "w2sq")])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for kind, k in sorted({(i, kk) for i, kk in zip(inits, ks)}):
        sel = np.array([i == kind and kk == k for i, kk in zip(inits, ks)])
        pos = sel & (w2sq > 0)
        ax.semilogy(steps[pos], w2sq[pos], "o-", ms=3.5, lw=1.1,
                    label=f"{kind}, K={k}")
    ax.set_xlabel("step")
    ax.set_ylabel("squared Wasserstein-2 to equilibrium")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, job.output, "w2")


def _render_continuous(job: FigureJob) -> list[Path]:
    header, rows = read_series(job.input_csv, "continuous")
    t = np.array([float(v) for v in column(header, rows, "time")])
    kl = np.array([float(v) for v in column(header, rows, "kl")])
    bound = np.array([float(v) for v in column(header, rows, "bound")])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    pos = kl > 0
    ax.semilogy(t[pos], kl[pos], "b-", lw=1.4, label="relative entropy")
    ax.semilogy(t, bound, "r--", lw=1.2, label="exponential decay bound")
    ax.set_xlabel("time")
    ax.set_ylabel("relative entropy to equilibrium")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, job.output, "continuous")


_RENDERERS = {
    "fig2": _render_fig2,
    "fig4": _render_fig4,
    "fig5": _render_fig5,
    "poc": _render_poc,
    "w2": _render_w2,
    "continuous": _render_continuous,
}


def render(job: FigureJob) -> list[Path]:
    """Render one job; returns the written paths (PNG then SVG).

    Validates the input schema before creating any output file, so a bad
    input leaves the output directory untouched.
    """
    return _RENDERERS[job.figure](job)
