"""Simulation and verification toolkit for K-neighbor averaging dynamics.

Particles jump to the mean of K uniformly sampled peers plus Gaussian
noise, either synchronously in discrete time or via independent Poisson
clocks.  The package simulates the finite-population system, evolves the
mean-field density on a grid by FFT, and verifies the contraction of
transport distance and relative entropy toward the Gaussian equilibrium.
"""

__version__ = "0.1.0"

from .continuous import EventLog, simulate
from .core import (
    ModelParams,
    RandomSource,
    equilibrium_density,
    equilibrium_variance,
    gaussian_noise,
)
from .density import (
    convolve,
    evolve_continuous,
    gaussian_smooth,
    iterate_mean_field,
    mean_field_step,
    scale,
    self_convolve,
)
from .discrete import (
    EmpiricalMeasure,
    Ensemble,
    center_of_mass_increments,
    empirical_measure,
    initial_ensemble,
    run,
    snapshots_to_csv,
    step,
)
from .grid import (
    ConvolutionAccuracyError,
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
from .metrics import (
    MetricReport,
    compare_densities,
    kl_divergence,
    neg_entropy,
    sample_from_density,
    test_function_errors,
    tv_distance,
    w2_empirical,
    w2_empirical_vs_grid,
    w2_grid,
)

__all__ = [
    "__version__",
    "ModelParams", "RandomSource", "gaussian_noise",
    "equilibrium_variance", "equilibrium_density",
    "GridSpec", "GridDensity", "TailTruncationWarning", "ConvolutionAccuracyError",
    "uniform_density", "laplace_density", "gaussian_density", "point_density",
    "density_to_csv", "density_from_csv",
    "self_convolve", "convolve", "scale", "gaussian_smooth",
    "mean_field_step", "iterate_mean_field", "evolve_continuous",
    "Ensemble", "EmpiricalMeasure", "empirical_measure", "initial_ensemble",
    "step", "run", "center_of_mass_increments", "snapshots_to_csv",
    "EventLog", "simulate",
    "MetricReport", "compare_densities", "tv_distance", "w2_grid",
    "w2_empirical", "w2_empirical_vs_grid", "neg_entropy", "kl_divergence",
    "sample_from_density", "test_function_errors",
]
