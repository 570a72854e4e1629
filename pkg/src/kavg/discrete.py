"""Synchronous discrete-time simulation of the K-averaging particles.

Each step, every particle is replaced by the mean of K indices drawn
i.i.d. uniformly over the whole population (with replacement, self
allowed) plus independent Gaussian noise.  All particles update from the
same step-n snapshot; the input ensemble is never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ModelParams, RandomSource

SNAPSHOT_SCHEMA = "kavg.snapshots.v1"


@dataclass(frozen=True)
class Ensemble:
    """Positions of N particles in d dimensions at one time index."""

    positions: np.ndarray  # (N, d) float64
    step: int = 0

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=np.float64)
        if p.ndim != 2:
            raise ValueError("positions must be an N x d array")
        if not np.all(np.isfinite(p)):
            raise ValueError("positions must be finite")
        if self.step < 0:
            raise ValueError("step must be nonnegative")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "positions", p)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def center_of_mass(self) -> np.ndarray:
        return self.positions.mean(axis=0)

    def coordinate_variance(self, ddof: int = 1) -> np.ndarray:
        return self.positions.var(axis=0, ddof=ddof)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniform-weight atomic measure (1/N) sum of deltas at the samples."""

    samples: np.ndarray

    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    def integrate(self, phi) -> float:
        """<measure, phi> for a scalar observable phi of the position."""
        return float(np.mean(phi(self.samples)))


def empirical_measure(ens: Ensemble) -> EmpiricalMeasure:
    return EmpiricalMeasure(ens.positions)


def _check_consistent(ens: Ensemble, params: ModelParams) -> None:
    if ens.n != params.N or ens.d != params.d:
        raise ValueError("ensemble shape does not match params (N, d)")


def _draw_neighbor_indices(
    rng: RandomSource, n: int, k: int, exclude_self: bool
) -> np.ndarray:
    if not exclude_self:
        return rng.integers(0, n, size=(n, k))
    if n < 2:
        raise ValueError("exclude_self requires at least 2 particles")
    idx = rng.integers(0, n - 1, size=(n, k))
    idx += idx >= np.arange(n)[:, None]
    return idx


def apply_update(positions: np.ndarray, idx: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Deterministic core of one step: K-average per row plus noise.

    Exchangeable by construction: permuting the particle labels of
    (positions, idx rows relabeled accordingly, noise rows) permutes the
    output rows the same way.
    """
    return positions[idx].mean(axis=1) + noise


def step(
    ens: Ensemble,
    params: ModelParams,
    rng: RandomSource,
    exclude_self: bool = False,
) -> Ensemble:
    """One synchronous update of the whole ensemble."""
    _check_consistent(ens, params)
    idx = _draw_neighbor_indices(rng, params.N, params.K, exclude_self)
    noise = rng.normal(scale=params.sigma, size=(params.N, params.d))
    return Ensemble(apply_update(ens.positions, idx, noise), ens.step + 1)


def run(
    ens0: Ensemble,
    params: ModelParams,
    n_steps: int,
    rng: RandomSource,
    record_every: int = 1,
    exclude_self: bool = False,
) -> list[Ensemble]:
    """Snapshots at steps 0, record_every, 2*record_every, ..., n_steps.

    The final step is always included.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    snapshots = [ens0]
    ens = ens0
    for i in range(1, n_steps + 1):
        ens = step(ens, params, rng, exclude_self=exclude_self)
        if i % record_every == 0 or i == n_steps:
            snapshots.append(ens)
    return snapshots


def center_of_mass_increments(trajectory: list[Ensemble]) -> np.ndarray:
    """Differences C_{n+1} - C_n of the ensemble mean along a trajectory.

    Requires a trajectory recorded every step (consecutive step indices).
    """
    if len(trajectory) < 2:
        raise ValueError("trajectory must contain at least 2 snapshots")
    steps = [e.step for e in trajectory]
    if any(b - a != 1 for a, b in zip(steps, steps[1:])):
        raise ValueError("center-of-mass increments need record_every=1")
    coms = np.array([e.center_of_mass() for e in trajectory])
    return np.diff(coms, axis=0)


# ---------------------------------------------------------------------------
# Initial conditions
# ---------------------------------------------------------------------------

def initial_ensemble(
    params: ModelParams,
    rng: RandomSource,
    kind: str = "uniform",
    a: float = 1.0,
    variance: float = 1.0,
    at: float = 0.0,
    path: str | Path | None = None,
) -> Ensemble:
    """Starting positions: uniform(-a, a), gaussian, point, or file-loaded."""
    shape = (params.N, params.d)
    if kind == "uniform":
        pos = rng.uniform(-a, a, size=shape)
    elif kind == "gaussian":
        pos = rng.normal(scale=float(np.sqrt(variance)), size=shape)
    elif kind == "point":
        pos = np.full(shape, at, dtype=np.float64)
    elif kind == "file":
        if path is None:
            raise ValueError("file init requires a path")
        loaded = ensemble_from_csv(path)
        if loaded.n != params.N or loaded.d != params.d:
            raise ValueError("loaded positions do not match params (N, d)")
        pos = loaded.positions
    else:
        raise ValueError(f"unknown init kind {kind!r}")
    return Ensemble(pos, step=0)


# ---------------------------------------------------------------------------
# CSV export / import
# ---------------------------------------------------------------------------

def snapshots_to_csv(
    snapshots: list[Ensemble],
    path: str | Path,
    labels=None,
    label_name: str = "step",
) -> None:
    """One row per particle per recorded snapshot.

    Header is `step,particle,coord0[,coord1,...]`; continuous-time callers
    pass label_name="time" and the snapshot times as labels.
    """
    if labels is None:
        labels = [e.step for e in snapshots]
    if len(labels) != len(snapshots):
        raise ValueError("labels and snapshots differ in length")
    d = snapshots[0].d
    cols = ",".join(f"coord{j}" for j in range(d))
    lines = [f"# schema={SNAPSHOT_SCHEMA}", f"{label_name},particle,{cols}"]
    for label, ens in zip(labels, snapshots):
        lab = repr(label) if isinstance(label, (int, np.integer)) else repr(float(label))
        for i in range(ens.n):
            coords = ",".join(repr(float(c)) for c in ens.positions[i])
            lines.append(f"{lab},{i},{coords}")
    Path(path).write_text("\n".join(lines) + "\n")


def ensemble_from_csv(path: str | Path) -> Ensemble:
    """Read back the last recorded snapshot from a snapshot CSV.

    Also accepts a bare table of coordinates (no step/particle columns).
    """
    rows = []
    header = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append(line.split(","))
    if header is None or not rows:
        raise ValueError("no positions found in CSV")
    if header[0] in ("step", "time") and header[1] == "particle":
        labels = np.array([float(r[0]) for r in rows])
        last = labels == labels.max()
        pos = np.array([[float(v) for v in r[2:]] for r, keep in zip(rows, last) if keep])
        step_val = int(labels.max()) if header[0] == "step" else 0
        return Ensemble(pos, step=step_val)
    pos = np.array([[float(v) for v in r] for r in rows])
    return Ensemble(pos, step=0)
