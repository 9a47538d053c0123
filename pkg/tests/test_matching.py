import itertools

import numpy as np
import pytest

from conftest import dense_match_expansion
from ppmalign.matching import (
    DenseBlockMatrix,
    MatchObservations,
    input_mismatch_rate,
    lap_project,
    match_solve,
    mismatch_rate,
    perm_matrix,
    sample_match_observations,
)


def brute_force_lap(score):
    """Lexicographically first permutation attaining the exact maximum."""
    m = score.shape[0]
    best_val = None
    best_p = None
    for p in itertools.permutations(range(m)):
        val = sum(score[a, p[a]] for a in range(m))
        if best_val is None or val > best_val:
            best_val = val
            best_p = p
    return np.array(best_p), best_val


class TestLapProject:
    def test_worked_example(self):
        # off-diagonal pair wins: 0.8 + 0.7 > 0.9 + 0.1
        np.testing.assert_array_equal(
            lap_project(np.array([[0.9, 0.8], [0.7, 0.1]])), [1, 0]
        )

    def test_matches_brute_force_with_ties(self):
        # integer scores force exact ties; gaps are at least 1 otherwise,
        # so the tolerance can never blur distinct optima
        rng = np.random.default_rng(0)
        for m in (2, 3, 4, 5):
            for _ in range(50):
                score = rng.integers(0, 4, (m, m)).astype(float)
                want, _ = brute_force_lap(score)
                np.testing.assert_array_equal(lap_project(score), want)

    def test_matches_brute_force_value_continuous(self):
        rng = np.random.default_rng(1)
        for m in (3, 4, 5):
            for _ in range(30):
                score = rng.standard_normal((m, m))
                p = lap_project(score)
                _, best = brute_force_lap(score)
                assert score[np.arange(m), p].sum() == pytest.approx(best)

    def test_constant_ties_break_to_identity(self):
        np.testing.assert_array_equal(lap_project(np.ones((4, 4))), [0, 1, 2, 3])

    def test_validation(self):
        with pytest.raises(ValueError):
            lap_project(np.ones((2, 3)))
        with pytest.raises(ValueError):
            lap_project(np.array([[np.inf, 0.0], [0.0, 1.0]]))

    def test_perm_matrix(self):
        np.testing.assert_array_equal(
            perm_matrix([2, 0, 1]),
            [[0, 0, 1], [1, 0, 0], [0, 1, 0]],
        )


class TestMismatchRate:
    def test_global_relabeling_is_free(self):
        rng = np.random.default_rng(2)
        truth = np.stack([rng.permutation(5) for _ in range(30)])
        g = rng.permutation(5)
        assert mismatch_rate(g[truth], truth) == 0.0

    def test_counts_wrong_entries(self):
        truth = np.stack([np.arange(4) for _ in range(10)])
        est = truth.copy()
        est[0] = [1, 0, 2, 3]  # two wrong assignments in one item
        assert mismatch_rate(est, truth) == pytest.approx(2 / 40)

    def test_validation(self):
        with pytest.raises(ValueError):
            mismatch_rate(np.zeros((3, 2), dtype=int), np.zeros((2, 2), dtype=int))


class TestObservations:
    def test_sampling_deterministic(self):
        a, ta = sample_match_observations(12, 4, 0.3, seed=3)
        b, tb = sample_match_observations(12, 4, 0.3, seed=3)
        np.testing.assert_array_equal(a.blocks, b.blocks)
        np.testing.assert_array_equal(ta, tb)

    def test_blocks_are_permutation_matrices(self):
        obs, _ = sample_match_observations(10, 5, 0.5, seed=4)
        assert obs.n_edges == 45
        np.testing.assert_array_equal(obs.blocks.sum(axis=1), np.ones((45, 5)))
        np.testing.assert_array_equal(obs.blocks.sum(axis=2), np.ones((45, 5)))

    def test_input_mismatch_tracks_corruption(self):
        clean, t0 = sample_match_observations(14, 4, 0.0, seed=5)
        assert input_mismatch_rate(clean, t0) == 0.0
        noisy, t1 = sample_match_observations(14, 4, 1.0, seed=6)
        assert input_mismatch_rate(noisy, t1) > 0.5

    def test_block_accessor_mirrors(self):
        obs, _ = sample_match_observations(6, 3, 0.4, seed=7)
        np.testing.assert_array_equal(obs.block(0, 4), obs.block(4, 0).T)
        with pytest.raises(KeyError):
            obs.block(2, 2)

    def test_partial_graph_missing_pair(self):
        obs, _ = sample_match_observations(20, 3, 0.0, seed=8, p_obs=0.3)
        assert 0 < obs.n_edges < 190
        present = set(zip(obs.ii.tolist(), obs.jj.tolist()))
        absent = next(
            (i, j) for i in range(20) for j in range(i) if (i, j) not in present
        )
        with pytest.raises(KeyError):
            obs.block(*absent)

    def test_csv_round_trip(self):
        # edge order is canonicalized on load; contents must survive exactly
        obs, _ = sample_match_observations(7, 3, 0.6, seed=9)
        again = MatchObservations.from_csv(obs.to_csv(), n=7, m=3)
        assert again.n_edges == obs.n_edges
        for a, b in zip(obs.ii.tolist(), obs.jj.tolist()):
            np.testing.assert_array_equal(again.block(a, b), obs.block(a, b))

    def test_csv_rejects_bad_header(self):
        with pytest.raises(ValueError):
            MatchObservations.from_csv("a,b,c\n", n=2, m=2)


class TestDenseBlockMatrix:
    def test_matches_dense_oracle(self):
        obs, _ = sample_match_observations(9, 4, 0.5, seed=10)
        op = DenseBlockMatrix(obs)
        dense = dense_match_expansion(obs)
        rng = np.random.default_rng(11)
        x = rng.standard_normal((36, 3))
        np.testing.assert_allclose(op.matmat(x), dense @ x, atol=1e-10)
        np.testing.assert_allclose(dense, dense.T, atol=0)

    def test_shape_validation(self):
        obs, _ = sample_match_observations(5, 3, 0.0, seed=12)
        with pytest.raises(ValueError):
            DenseBlockMatrix(obs).matmat(np.ones((7, 2)))


class TestMatchSolve:
    def test_noiseless_exact(self):
        obs, truth = sample_match_observations(25, 5, 0.0, seed=13)
        rep = match_solve(obs, T=30, seed=14, truth=truth)
        assert rep.final_mismatch == 0.0
        assert rep.converged

    def test_corrupted_instances_recover(self):
        for seed in (20, 21, 22):
            obs, truth = sample_match_observations(40, 8, 0.3, seed=seed)
            rep = match_solve(obs, T=30, seed=seed, truth=truth)
            assert input_mismatch_rate(obs, truth) > 0.2
            assert rep.final_mismatch == 0.0
            assert rep.converged

    def test_zero_budget_returns_spectral_assignment(self):
        obs, truth = sample_match_observations(15, 4, 0.2, seed=15)
        rep = match_solve(obs, T=0, seed=16, truth=truth)
        assert rep.iterations_run == 0
        assert not rep.converged
        assert rep.mismatch_trace.shape == (1,)

    def test_estimates_csv(self):
        obs, truth = sample_match_observations(6, 3, 0.0, seed=17)
        rep = match_solve(obs, T=10, seed=18)
        lines = rep.estimates_csv().splitlines()
        assert lines[0] == "i,feature,assigned"
        assert len(lines) == 1 + 6 * 3
        assert rep.mismatch_trace is None
        with pytest.raises(ValueError):
            rep.final_mismatch

    def test_validation(self):
        obs, _ = sample_match_observations(5, 3, 0.0, seed=19)
        with pytest.raises(ValueError):
            match_solve(obs, T=-1, seed=0)
