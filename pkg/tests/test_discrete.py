"""Discrete-time particle dynamics: update law, trajectories, exports."""

import numpy as np
import pytest

from kavg import (
    Ensemble,
    ModelParams,
    RandomSource,
    center_of_mass_increments,
    empirical_measure,
    initial_ensemble,
    run,
    snapshots_to_csv,
    step,
)
from kavg.discrete import apply_update, ensemble_from_csv


class TestEnsemble:
    def test_validation(self):
        with pytest.raises(ValueError):
            Ensemble(np.zeros(5))  # not N x d
        with pytest.raises(ValueError):
            Ensemble(np.array([[np.inf]]))
        with pytest.raises(ValueError):
            Ensemble(np.zeros((3, 1)), step=-1)

    def test_positions_read_only(self):
        ens = Ensemble(np.zeros((3, 2)))
        with pytest.raises(ValueError):
            ens.positions[0, 0] = 1.0


class TestStep:
    def test_collapsed_ensemble_stays_put(self):
        # all particles at x0 with vanishing noise: the K-average is x0
        p = ModelParams(d=2, K=7, sigma=1e-12, N=50)
        ens = Ensemble(np.full((50, 2), 1.25))
        out = step(ens, p, RandomSource(3))
        assert np.max(np.abs(out.positions - 1.25)) < 1e-10
        assert out.step == 1

    def test_single_particle_random_walk_variance(self):
        # N=1: every neighbor draw is the particle itself, so increments are
        # pure noise; Monte Carlo vs the N(0, sigma^2) oracle over 1e5 steps
        p = ModelParams(d=1, K=4, sigma=0.1, N=1)
        rng = RandomSource(11)
        traj = run(Ensemble(np.zeros((1, 1))), p, 100_000, rng)
        xs = np.array([e.positions[0, 0] for e in traj])
        inc = np.diff(xs)
        assert np.var(inc) == pytest.approx(0.01, rel=0.02)

    def test_one_step_variance_recursion_monte_carlo(self):
        # E[Var after step] = Var(before)/K + sigma^2, within 3 SE over 100 seeds
        p = ModelParams(d=1, K=5, sigma=0.1, N=10_000)
        v_out = []
        pred = []
        for s in range(100):
            rng = RandomSource(1234, stream=s)
            ens = initial_ensemble(p, rng, kind="uniform", a=1.0)
            pred.append(np.var(ens.positions[:, 0]) / p.K + p.sigma**2)
            v_out.append(np.var(step(ens, p, rng).positions[:, 0]))
        v_out = np.array(v_out)
        se = v_out.std(ddof=1) / np.sqrt(len(v_out))
        assert abs(v_out.mean() - np.mean(pred)) <= 3 * se

    def test_input_not_mutated(self):
        p = ModelParams(d=1, K=2, sigma=0.1, N=10)
        ens = Ensemble(np.arange(10, dtype=float).reshape(-1, 1))
        before = ens.positions.copy()
        step(ens, p, RandomSource(0))
        assert np.array_equal(ens.positions, before)

    def test_shape_mismatch_rejected(self):
        p = ModelParams(d=1, K=2, sigma=0.1, N=10)
        with pytest.raises(ValueError):
            step(Ensemble(np.zeros((5, 1))), p, RandomSource(0))

    def test_exclude_self_with_two_particles(self):
        # N=2, K=1, exclude_self: each particle jumps to the other (plus noise)
        p = ModelParams(d=1, K=1, sigma=1e-12, N=2)
        ens = Ensemble(np.array([[0.0], [1.0]]))
        out = step(ens, p, RandomSource(8), exclude_self=True)
        assert out.positions[0, 0] == pytest.approx(1.0, abs=1e-9)
        assert out.positions[1, 0] == pytest.approx(0.0, abs=1e-9)


class TestExchangeability:
    def test_update_core_commutes_with_permutations(self):
        # permuting labels and relabeling the draws permutes the output
        rng = RandomSource(21)
        n, k, d = 40, 3, 2
        pos = rng.normal(size=(n, d))
        idx = rng.integers(0, n, size=(n, k))
        noise = rng.normal(size=(n, d))
        perm = np.random.Generator(np.random.Philox(5)).permutation(n)
        inv = np.argsort(perm)
        base = apply_update(pos, idx, noise)
        permuted = apply_update(pos[perm], inv[idx[perm]], noise[perm])
        assert np.allclose(permuted, base[perm], atol=0)


class TestRun:
    def test_zero_steps(self):
        p = ModelParams(d=1, K=2, sigma=0.1, N=5)
        ens = Ensemble(np.zeros((5, 1)))
        assert run(ens, p, 0, RandomSource(1)) == [ens]

    def test_record_every_endpoints(self):
        p = ModelParams(d=1, K=2, sigma=0.1, N=5)
        ens = Ensemble(np.zeros((5, 1)))
        snaps = run(ens, p, 10, RandomSource(1), record_every=10)
        assert [e.step for e in snaps] == [0, 10]

    def test_final_step_always_included(self):
        p = ModelParams(d=1, K=2, sigma=0.1, N=5)
        snaps = run(Ensemble(np.zeros((5, 1))), p, 10, RandomSource(1), record_every=4)
        assert [e.step for e in snaps] == [0, 4, 8, 10]

    def test_deterministic_trajectories(self):
        p = ModelParams(d=2, K=3, sigma=0.5, N=64)
        def go():
            rng = RandomSource(77, stream=9)
            return run(initial_ensemble(p, rng, kind="gaussian", variance=2.0), p, 25, rng)
        a, b = go(), go()
        assert all(np.array_equal(x.positions, y.positions) for x, y in zip(a, b))

    def test_long_run_reaches_equilibrium_variance(self):
        # the stationary spread is K sigma^2/(K-1); single long run, 3 SE band
        p = ModelParams(d=1, K=5, sigma=0.1, N=5000)
        rng = RandomSource(42)
        final = run(initial_ensemble(p, rng, kind="uniform", a=1.0), p, 1000, rng,
                    record_every=1000)[-1]
        v = np.var(final.positions[:, 0], ddof=1)
        se = 0.0125 * np.sqrt(2 / (p.N - 1)) * np.sqrt(25 / 24)
        assert abs(v - 0.0125) <= 3 * se


class TestCenterOfMass:
    def test_frozen_trajectory_gives_zero_increments(self):
        pos = np.arange(8, dtype=float).reshape(-1, 1)
        traj = [Ensemble(pos, step=i) for i in range(4)]
        assert np.all(center_of_mass_increments(traj) == 0.0)

    def test_short_trajectory_rejected(self):
        with pytest.raises(ValueError):
            center_of_mass_increments([Ensemble(np.zeros((2, 1)))])

    def test_subsampled_trajectory_rejected(self):
        pos = np.zeros((2, 1))
        traj = [Ensemble(pos, step=0), Ensemble(pos, step=2)]
        with pytest.raises(ValueError, match="record_every=1"):
            center_of_mass_increments(traj)

    def test_increments_are_centered_martingale_differences(self):
        # across replicas the mean increment vanishes (3 SE band)
        p = ModelParams(d=1, K=2, sigma=0.1, N=50)
        incs = []
        for r in range(60):
            rng = RandomSource(3141, stream=r)
            traj = run(initial_ensemble(p, rng, kind="uniform", a=1.0), p, 20, rng)
            incs.append(center_of_mass_increments(traj)[:, 0])
        incs = np.concatenate(incs)
        se = incs.std(ddof=1) / np.sqrt(incs.size)
        assert abs(incs.mean()) <= 3 * se


class TestEmpiricalMeasure:
    def test_mean(self):
        ens = Ensemble(np.array([[0.0], [1.0], [2.0]]))
        assert empirical_measure(ens).mean()[0] == pytest.approx(1.0)

    def test_unit_total_mass(self):
        ens = Ensemble(np.array([[0.0], [1.0], [2.0]]))
        assert empirical_measure(ens).integrate(lambda x: np.ones(len(x))) == 1.0

    def test_histogram_sums_to_one(self):
        ens = Ensemble(RandomSource(4).normal(size=(500, 1)))
        m = empirical_measure(ens)
        hist, edges = np.histogram(m.samples[:, 0], bins=20, density=True)
        assert np.sum(hist * np.diff(edges)) == pytest.approx(1.0, abs=1e-12)


class TestSnapshotCsv:
    def test_round_trip_last_snapshot(self, tmp_path):
        p = ModelParams(d=2, K=2, sigma=0.3, N=6)
        rng = RandomSource(5)
        snaps = run(initial_ensemble(p, rng, kind="gaussian"), p, 4, rng, record_every=2)
        path = tmp_path / "snaps.csv"
        snapshots_to_csv(snaps, path)
        header = path.read_text().splitlines()
        assert header[0].startswith("# schema=")
        assert header[1] == "step,particle,coord0,coord1"
        back = ensemble_from_csv(path)
        assert back.step == 4
        assert np.array_equal(back.positions, snaps[-1].positions)

    def test_time_labels(self, tmp_path):
        snaps = [Ensemble(np.zeros((2, 1)), step=0), Ensemble(np.ones((2, 1)), step=3)]
        path = tmp_path / "t.csv"
        snapshots_to_csv(snaps, path, labels=[0.0, 1.5], label_name="time")
        assert "time,particle,coord0" in path.read_text().splitlines()[1]
