"""Acceptance criteria: the definition of done for the toolkit.

Each criterion is a function returning a CriterionResult; ``run_all``
executes every one (writing experiment outputs under the given
directory) and ``verify`` prints a pass/fail table and returns a shell
exit code.  Tolerances are pinned here and nowhere else.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import RandomSource, equilibrium_density, equilibrium_variance
from .density import convolve, iterate_mean_field, mean_field_step, scale, self_convolve
from .experiments import default_config, run_experiment
from .grid import (
    GridDensity,
    GridSpec,
    TailTruncationWarning,
    finalize_density,
    gaussian_density,
    laplace_density,
    uniform_density,
)
from .metrics import kl_divergence, neg_entropy, tv_distance, w2_grid


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str


def _random_density(grid: GridSpec, rng: RandomSource) -> GridDensity:
    """Smooth random mixture of Gaussian bumps, well inside the grid.

    A vanishing uniform background keeps the density strictly positive so
    random pairs stay mutually absolutely continuous on the grid.
    """
    n_comp = int(rng.integers(2, 6))
    x = grid.x()
    raw = np.full_like(x, 1e-10)
    for _ in range(n_comp):
        mu = rng.uniform(-1.0, 1.0)
        s = rng.uniform(0.05, 0.3)
        w = rng.uniform(0.2, 1.0)
        raw += w * np.exp(-((x - mu) ** 2) / (2 * s * s))
    return finalize_density(grid, raw)


def check_fixed_point(out_dir: Path) -> CriterionResult:
    """Equilibrium density is a fixed point of the mean-field step (L1 < 1e-6)."""
    grid = GridSpec.default()
    eq = equilibrium_density(grid, K=5, sigma=0.1)
    resid = tv_distance(mean_field_step(eq, 5, 0.1), eq)
    return CriterionResult("fixed-point", resid < 1e-6,
                           f"||step(eq) - eq||_1 = {resid:.3e} (< 1e-6)")


def check_variance_recursion(out_dir: Path) -> CriterionResult:
    """v_{n+1} = v_n/K + sigma^2 within 1e-8 each step; limit -> K sigma^2/(K-1)."""
    grid = GridSpec.default()
    K, sigma = 5, 0.1
    iterates = iterate_mean_field(uniform_density(grid, 1.0), K, sigma, 40)
    v = [r.variance() for r in iterates]
    worst = max(abs(v[n + 1] - (v[n] / K + sigma**2)) for n in range(len(v) - 1))
    limit_err = abs(v[-1] - equilibrium_variance(K, sigma))
    ok = worst < 1e-8 and limit_err < 1e-6
    return CriterionResult(
        "variance-recursion", ok,
        f"max step residual {worst:.3e} (< 1e-8), limit error {limit_err:.3e} (< 1e-6)",
    )


def check_kl_contraction(out_dir: Path) -> CriterionResult:
    """Entropy-decay experiment: ratios <= 1/K until the 1e-12 floor."""
    summary = run_experiment(default_config("fig5-entropy", out_dir / "fig5"))
    detail = "; ".join(f"{c.name}={c.observed:.3e}" for c in summary.checks)
    return CriterionResult("kl-contraction", summary.passed, detail)


def check_w2_contraction(out_dir: Path) -> CriterionResult:
    """Squared transport ratios <= 1/K + 1e-3 for both inits, K in {2, 5}."""
    summary = run_experiment(default_config("w2-contraction", out_dir / "w2"))
    detail = "; ".join(f"{c.name}={c.observed:.3f}" for c in summary.checks)
    return CriterionResult("w2-contraction", summary.passed, detail)


def check_gaussian_limit(out_dir: Path) -> CriterionResult:
    """Long particle run matches the Gaussian limit for all 5 seeds."""
    summary = run_experiment(default_config("fig2-histogram", out_dir / "fig2"))
    worst_w2 = max(c.observed for c in summary.checks if c.name.startswith("w2"))
    detail = f"all seeds pass; worst W2 = {worst_w2:.4f} (< 0.01)"
    if not summary.passed:
        detail = "; ".join(f"{c.name}={c.observed:.4f}({'ok' if c.passed else 'FAIL'})"
                           for c in summary.checks)
    return CriterionResult("gaussian-limit", summary.passed, detail)


def check_density_relaxation(out_dir: Path) -> CriterionResult:
    """Five density steps land within 5e-3 of equilibrium in L1."""
    summary = run_experiment(default_config("fig4-density", out_dir / "fig4"))
    meta = summary.metadata
    detail = (f"||rho_3 - eq||_1 = {meta['l1_step3']:.3e}, "
              f"||rho_5 - eq||_1 = {meta['l1_step5']:.3e} (< 5e-3)")
    return CriterionResult("density-relaxation", summary.passed, detail)


def check_poc_rate(out_dir: Path) -> CriterionResult:
    """Log-log W2-error slope vs N lies in [-0.65, -0.35]."""
    summary = run_experiment(default_config("poc-rate", out_dir / "poc"))
    detail = f"slope = {summary.metadata['slope']:.3f} (in [-0.65, -0.35])"
    return CriterionResult("poc-rate", summary.passed, detail)


def check_com_diffusion(out_dir: Path) -> CriterionResult:
    """Center-of-mass increments: zero mean, variance >= sigma^2/N - slack."""
    summary = run_experiment(default_config("com-diffusion", out_dir / "com"))
    detail = "; ".join(f"{c.name}={c.observed:.3e}" for c in summary.checks)
    return CriterionResult("com-diffusion", summary.passed, detail)


def check_continuous_decay(out_dir: Path) -> CriterionResult:
    """Continuous-time entropy bound and event-driven equilibrium variance."""
    summary = run_experiment(default_config("continuous-decay", out_dir / "cont"))
    detail = "; ".join(f"{c.name}={c.observed:.4f}" for c in summary.checks)
    return CriterionResult("continuous-decay", summary.passed, detail)


def check_info_theory(out_dir: Path) -> CriterionResult:
    """Entropy convexity, entropy monotonicity, KL >= 0, TV Lipschitz bound."""
    grid = GridSpec.default()
    failures = []

    # Convexity of neg-entropy under sqrt-mixtures of independent variables
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailTruncationWarning)
        pairs = [
            (gaussian_density(grid, 0.0125), gaussian_density(grid, 0.05)),
            (laplace_density(grid), gaussian_density(grid, 0.0125)),
            (uniform_density(grid, 1.0), gaussian_density(grid, 0.05)),
        ]
        for gi, (g, h) in enumerate(pairs):
            for lam in (0.25, 0.5, 0.75):
                left = convolve(scale(g, 1.0 / math.sqrt(lam)),
                                scale(h, 1.0 / math.sqrt(1.0 - lam)))
                lhs = neg_entropy(left)
                rhs = lam * neg_entropy(g) + (1 - lam) * neg_entropy(h)
                if lhs > rhs + 1e-6:
                    failures.append(f"mixture-convexity pair{gi} lam={lam}: "
                                    f"{lhs:.6f} > {rhs:.6f}")

        # Monotone neg-entropy of normalized n-fold sums
        lap = laplace_density(grid)
        seq = [neg_entropy(scale(self_convolve(lap, n), math.sqrt(n))) for n in range(1, 7)]
        for n in range(1, len(seq)):
            if seq[n] > seq[n - 1] + 1e-6:
                failures.append(f"entropy-monotonicity n={n + 1}: {seq[n]:.6f} > {seq[n - 1]:.6f}")

    # KL nonnegativity and TV Lipschitz bound on random pairs
    rng = RandomSource(20260810, stream=0)
    small = GridSpec.standard(4.0, 4096)
    for i in range(100):
        mu = _random_density(small, rng)
        nu = _random_density(small, rng)
        if kl_divergence(mu, nu) < 0:
            failures.append(f"kl<0 on pair {i}")
        if tv_distance(mean_field_step(mu, 5, 0.1), mean_field_step(nu, 5, 0.1)) > \
                5 * tv_distance(mu, nu) + 1e-9:
            failures.append(f"tv-lipschitz violated on pair {i}")

    detail = "all inequalities hold" if not failures else "; ".join(failures[:4])
    return CriterionResult("info-theory", not failures, detail)


ALL_CRITERIA = [
    check_fixed_point,
    check_variance_recursion,
    check_kl_contraction,
    check_w2_contraction,
    check_gaussian_limit,
    check_density_relaxation,
    check_poc_rate,
    check_com_diffusion,
    check_continuous_decay,
    check_info_theory,
]


def run_all(out_dir: str | Path) -> list[CriterionResult]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [fn(out) for fn in ALL_CRITERIA]


def verify(out_dir: str | Path, suite_dir: str | Path | None = None) -> int:
    """Run every acceptance criterion; print a table; 0 iff all pass.

    When suite_dir is given, experiment configs found there (INI files)
    override the built-in defaults for the matching experiments.
    """
    from .experiments import load_config, run_experiment as _run

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if suite_dir is not None:
        for ini in sorted(Path(suite_dir).glob("*.ini")):
            cfg = load_config(ini, output_dir=out / ini.stem)
            summary = _run(cfg)
            status = "pass" if summary.passed else "FAIL"
            print(f"[suite] {cfg.experiment:<20} {status}")

    results = run_all(out)
    width = max(len(r.name) for r in results)
    print()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    n_fail = sum(not r.passed for r in results)
    print(f"\n{len(results) - n_fail}/{len(results)} criteria passed")
    if n_fail:
        print("failed: " + ", ".join(r.name for r in results if not r.passed))
    return 0 if n_fail == 0 else 1
