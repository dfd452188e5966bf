"""Tests for precision weights and the regularity diagnostic."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from owb import (
    InvariantError,
    NonPositiveVariance,
    WeightVector,
    check_weight_regularity,
    precision_weights,
    uniform_weights,
)

variance_vectors = st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=30)


class TestPrecisionWeights:
    def test_equal_variances_give_exact_quarter_weights(self):
        wv = precision_weights([1.0, 1.0, 1.0, 1.0], "ideal")
        assert wv.w.tolist() == [0.25, 0.25, 0.25, 0.25]
        assert wv.min_weight_ratio == pytest.approx(1.0)

    def test_two_to_one_hand_example(self):
        wv = precision_weights([1.0, 2.0], "feasible")
        np.testing.assert_allclose(wv.w, [2 / 3, 1 / 3])

    def test_identical_variances_exactly_uniform(self):
        # equal per-persona variances must produce numerically equal weights
        v = 0.5 + 0.25 + 2.0 / 1.0
        wv = precision_weights([v] * 7, "ideal")
        assert np.all(wv.w == wv.w[0])

    def test_rejects_nonpositive(self):
        with pytest.raises(NonPositiveVariance):
            precision_weights([1.0, 0.0], "ideal")
        with pytest.raises(NonPositiveVariance):
            precision_weights([1.0, -2.0], "feasible")

    def test_kind_tag_checked(self):
        with pytest.raises(InvariantError):
            WeightVector(w=np.array([1.0]), kind="mystery", min_weight_ratio=1.0)

    @given(variance_vectors)
    @settings(max_examples=100, deadline=None)
    def test_sums_to_one_and_positive(self, v):
        wv = precision_weights(v, "feasible")
        assert abs(float(np.sum(wv.w, dtype=np.float64)) - 1.0) <= 1e-12
        assert np.all(wv.w > 0)

    @given(variance_vectors, st.floats(1e-6, 1e6))
    @settings(max_examples=100, deadline=None)
    def test_scale_invariance(self, v, c):
        """Multiplying all variances by c > 0 leaves the weights unchanged."""
        base = precision_weights(v, "ideal")
        scaled = precision_weights([c * x for x in v], "ideal")
        np.testing.assert_allclose(scaled.w, base.w, rtol=1e-12, atol=1e-15)

    @given(variance_vectors)
    @settings(max_examples=100, deadline=None)
    def test_smallest_variance_gets_largest_weight(self, v):
        wv = precision_weights(v, "ideal")
        assert np.argmax(wv.w) == np.argmin(np.asarray(v))

    def test_ties_get_exactly_equal_weights(self):
        wv = precision_weights([2.0, 5.0, 2.0], "ideal")
        assert wv.w[0] == wv.w[2]

    def test_feasible_converges_to_ideal_under_substitution(self):
        """w(v_hat) -> w(v) entrywise as v_hat -> c * v."""
        rng = np.random.default_rng(3)
        v = rng.uniform(0.5, 4.0, size=12)
        ideal = precision_weights(v, "ideal")
        for noise in (1e-2, 1e-4, 1e-8):
            v_hat = 3.7 * v * (1.0 + noise * rng.standard_normal(12))
            feasible = precision_weights(v_hat, "feasible")
            assert np.max(np.abs(feasible.w - ideal.w)) < 4 * noise


class TestUniformWeights:
    def test_materialized_probabilities(self):
        wv = uniform_weights(4)
        assert wv.kind == "uniform"
        assert wv.w.tolist() == [0.25] * 4


class TestWeightRegularity:
    def test_balanced_pair_passes(self):
        report = check_weight_regularity(
            WeightVector(w=np.array([0.5, 0.5]), kind="feasible", min_weight_ratio=1.0), 0.5
        )
        assert report.passed and report.value == pytest.approx(1.0)

    def test_dominated_pair_fails_with_value(self):
        wv = WeightVector(w=np.array([0.999, 0.001]), kind="feasible", min_weight_ratio=0.002)
        report = check_weight_regularity(wv, 0.5)
        assert not report.passed
        assert report.value == pytest.approx(0.002)

    @given(st.integers(1, 40), st.floats(0.01, 1.0))
    @settings(max_examples=50, deadline=None)
    def test_uniform_always_passes_with_value_one(self, n, delta):
        report = check_weight_regularity(uniform_weights(n), delta)
        assert report.passed
        assert report.value == pytest.approx(1.0)

    def test_threshold_domain(self):
        with pytest.raises(InvariantError):
            check_weight_regularity(uniform_weights(2), 0.0)
