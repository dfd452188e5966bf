"""Tests for hierarchical variance pooling."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from owb import ClusterMap, InvariantError, PersonaSummary, PoolingConfig, pool_variances


def make_summary(raw, df):
    raw = np.asarray(raw, dtype=np.float64)
    df = np.asarray(df, dtype=np.int64)
    n = raw.size
    return PersonaSummary(
        means=np.zeros((n, 1)),
        counts=np.ones((n, 1), dtype=np.int64),
        raw_trace_var=np.where(df >= 1, raw, 0.0),
        trace_defined=df >= 1,
        df=df,
    )


class TestPoolingConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(InvariantError):
            PoolingConfig(prior_strength_persona=0.0)
        with pytest.raises(InvariantError):
            PoolingConfig(variance_floor=0.0)


class TestPoolVariances:
    def test_two_persona_hand_example(self):
        # v = [1, 3], df = [10, 10], m0 = m1 = 5 -> v_eff = [4/3, 8/3]
        summary = make_summary([1.0, 3.0], [10, 10])
        pooled = pool_variances(summary, ClusterMap.single_cluster(2), PoolingConfig(5, 5))
        assert pooled.v_global == pytest.approx(2.0)
        assert pooled.v_cluster[0] == pytest.approx(2.0)
        assert pooled.v_cluster_shrunk[0] == pytest.approx(2.0)
        np.testing.assert_allclose(pooled.lambda_persona, [1 / 3, 1 / 3])
        np.testing.assert_allclose(pooled.v_eff, [4 / 3, 8 / 3])

    def test_zero_df_persona_takes_cluster_value(self):
        summary = make_summary([2.5, 2.5, 0.0], [10, 10, 0])
        pooled = pool_variances(summary, ClusterMap.single_cluster(3), PoolingConfig(5, 5))
        assert pooled.lambda_persona[2] == 1.0
        assert pooled.v_eff[2] == pytest.approx(pooled.v_cluster_shrunk[0])
        assert pooled.v_eff[2] == pytest.approx(2.5)

    def test_identical_raw_values_are_fixed_point(self):
        summary = make_summary([0.7] * 5, [3, 9, 4, 2, 8])
        pooled = pool_variances(summary, ClusterMap.contiguous_blocks(5, 2), PoolingConfig())
        np.testing.assert_allclose(pooled.v_eff, 0.7)

    def test_degenerate_no_df_anywhere(self):
        summary = make_summary([0.0, 0.0], [0, 0])
        cfg = PoolingConfig(variance_floor=1e-10)
        pooled = pool_variances(summary, ClusterMap.single_cluster(2), cfg)
        assert pooled.degenerate
        np.testing.assert_array_equal(pooled.v_eff, 1e-10)
        np.testing.assert_array_equal(pooled.lambda_persona, 1.0)
        assert np.all(np.isfinite(pooled.v_eff))

    def test_floor_applied_to_zero_variance(self):
        summary = make_summary([0.0, 0.0], [4, 4])
        pooled = pool_variances(summary, ClusterMap.single_cluster(2), PoolingConfig())
        assert np.all(pooled.v_eff == PoolingConfig().variance_floor)

    def test_lambda_monotone_in_df(self):
        summary = make_summary([1.0, 1.0, 1.0, 1.0], [1, 5, 50, 5000])
        pooled = pool_variances(summary, ClusterMap.single_cluster(4), PoolingConfig())
        lam = pooled.lambda_persona
        assert np.all(np.diff(lam) < 0)
        assert lam[-1] < 0.002

    def test_lambda_override_bounds(self):
        summary = make_summary([1.0], [3])
        with pytest.raises(InvariantError):
            pool_variances(summary, ClusterMap.single_cluster(1), lambda_override=1.5)

    def test_lambda_override_zero_returns_raw(self):
        summary = make_summary([0.4, 0.9], [4, 4])
        pooled = pool_variances(summary, ClusterMap.single_cluster(2), lambda_override=0.0)
        np.testing.assert_array_equal(pooled.v_eff, [0.4, 0.9])

    @given(
        raw=st.lists(st.floats(1e-6, 1e3), min_size=2, max_size=12),
        df_seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=80, deadline=None)
    def test_monotone_interpolation_and_positivity(self, raw, df_seed):
        """v_eff lies between the raw value and the shrunk cluster target."""
        rng = np.random.default_rng(df_seed)
        df = rng.integers(0, 30, size=len(raw))
        if not (df >= 1).any():
            df[0] = 1
        summary = make_summary(raw, df)
        clusters = ClusterMap.contiguous_blocks(len(raw), min(3, len(raw)))
        pooled = pool_variances(summary, clusters, PoolingConfig())
        assert np.all(pooled.v_eff > 0)
        assert np.all(np.isfinite(pooled.v_eff))
        for p in range(len(raw)):
            target = pooled.v_cluster_shrunk[clusters.assignment[p]]
            if df[p] >= 1:
                lo, hi = min(raw[p], target), max(raw[p], target)
                floored = max(pooled.v_eff[p], PoolingConfig().variance_floor)
                assert lo - 1e-12 <= floored <= hi + max(1e-12, hi * 1e-12)
            else:
                assert pooled.v_eff[p] == pytest.approx(max(target, 1e-12))
