"""Tests for the panel data model and persona summaries."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from owb import ClusterMap, InvariantError, VoteTensor, summarize

nan = float("nan")


class TestVoteTensor:
    def test_nan_ingestion_becomes_mask(self):
        t = VoteTensor.from_arrays([[[1.0, nan], [np.inf, 2.0]]])
        assert t.mask[0].tolist() == [[True, False], [False, True]]
        # masked payloads are zeroed, never NaN
        assert np.all(np.isfinite(t.values[0]))

    def test_explicit_mask_intersects_finiteness(self):
        t = VoteTensor.from_arrays([[[1.0, 2.0]]], [[[True, False]]])
        assert t.mask[0].tolist() == [[True, False]]

    def test_shapes(self):
        t = VoteTensor.from_arrays([[[1, 2]], [[3, 4], [5, 6]]])
        assert t.n_personas == 2
        assert t.n_petals == 2
        assert t.rounds_per_persona == [1, 2]

    def test_rejects_empty_and_ragged_petals(self):
        with pytest.raises(InvariantError):
            VoteTensor.from_arrays([])
        with pytest.raises(InvariantError):
            VoteTensor.from_arrays([[[1, 2]], [[1, 2, 3]]])

    def test_rejects_nonfinite_under_mask(self):
        vals = np.array([[1.0, nan]])
        with pytest.raises(InvariantError):
            VoteTensor(values=(vals,), mask=(np.array([[True, True]]),))

    def test_petal_observation_counts(self):
        t = VoteTensor.from_arrays([[[1, nan]], [[nan, nan], [2, nan]]])
        assert t.petal_observation_counts().tolist() == [2, 0]
        assert t.total_observed() == 2


class TestClusterMap:
    def test_contiguity_enforced(self):
        with pytest.raises(InvariantError):
            ClusterMap(np.array([0, 2]))  # skips id 1

    def test_members_and_blocks(self):
        cm = ClusterMap.contiguous_blocks(5, 2)
        assert cm.n_clusters == 2
        assert sorted(cm.members(0).tolist() + cm.members(1).tolist()) == [0, 1, 2, 3, 4]

    def test_single_cluster(self):
        cm = ClusterMap.single_cluster(3)
        assert cm.n_clusters == 1
        assert cm.n_personas == 3


class TestSummarize:
    def test_two_rounds_two_petals(self):
        # rounds [[1,3],[3,5]]: per-petal sample variance 2, n=2, trace = 1.0
        s = summarize(VoteTensor.from_arrays([[[1, 3], [3, 5]]]))
        assert s.means.tolist() == [[2.0, 4.0]]
        assert s.counts.tolist() == [[2, 2]]
        assert s.raw_trace_var[0] == pytest.approx(1.0)
        assert s.trace_defined[0]
        assert s.df[0] == 2

    def test_single_round_has_undefined_variance(self):
        s = summarize(VoteTensor.from_arrays([[[7, 7]]]))
        assert s.means.tolist() == [[7.0, 7.0]]
        assert not s.trace_defined[0]
        assert s.df[0] == 0

    def test_constant_observations_give_zero_variance(self):
        s = summarize(VoteTensor.from_arrays([[[5, nan], [5, nan]]]))
        assert s.means[0, 0] == 5.0
        assert s.counts.tolist() == [[2, 0]]
        assert s.trace_defined[0]
        assert s.raw_trace_var[0] == 0.0

    def test_fully_observed_matches_plain_mean(self):
        rng = np.random.default_rng(5)
        rounds = rng.normal(size=(7, 4))
        s = summarize(VoteTensor.from_arrays([rounds]))
        np.testing.assert_allclose(s.means[0], rounds.mean(axis=0), rtol=0, atol=1e-15)

    def test_no_nan_anywhere(self):
        rng = np.random.default_rng(6)
        vals = rng.normal(size=(5, 3))
        vals[rng.random(size=(5, 3)) < 0.6] = nan
        s = summarize(VoteTensor.from_arrays([vals]))
        for arr in (s.means, s.raw_trace_var):
            assert np.all(np.isfinite(arr))

    @given(st.lists(st.lists(st.floats(-100, 100), min_size=3, max_size=3),
                    min_size=2, max_size=8),
           st.randoms(use_true_random=False))
    @settings(max_examples=60, deadline=None)
    def test_round_permutation_invariance_is_exact(self, rows, shuffler):
        base = summarize(VoteTensor.from_arrays([rows]))
        permuted = list(rows)
        shuffler.shuffle(permuted)
        perm = summarize(VoteTensor.from_arrays([permuted]))
        assert np.array_equal(base.means, perm.means)
        assert np.array_equal(base.counts, perm.counts)
        assert np.array_equal(base.raw_trace_var, perm.raw_trace_var)

    def test_means_stay_within_observed_range(self):
        rng = np.random.default_rng(7)
        vals = rng.normal(size=(6, 2))
        s = summarize(VoteTensor.from_arrays([vals]))
        for j in range(2):
            assert vals[:, j].min() <= s.means[0, j] <= vals[:, j].max()

    def test_immutability(self):
        s = summarize(VoteTensor.from_arrays([[[1, 2]]]))
        with pytest.raises(ValueError):
            s.means[0, 0] = 99.0
