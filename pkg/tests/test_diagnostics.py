"""Tests for the audit log, explicit-probability sampling, and NaN scans."""

import json

import numpy as np
import pytest

from owb import (
    AuditLog,
    ClusterMap,
    InvariantError,
    VoteTensor,
    impute,
    scan_nan,
    uniform_weights,
    weighted_indices,
    weighted_value,
)

nan = float("nan")


class TestScanNan:
    def test_completed_tensor_scans_clean(self):
        tensor = VoteTensor.from_arrays([[[1.0, nan], [2.0, 3.0]]])
        report = impute(tensor, ClusterMap.single_cluster(1), uniform_weights(1), seed=0)
        assert scan_nan(report.completed) == 0

    def test_counts_corrupted_entries(self):
        arr = np.array([[1.0, nan], [np.inf, nan]])
        assert scan_nan(arr) == 3

    def test_masked_raw_tensor_scans_clean(self):
        tensor = VoteTensor.from_arrays([[[1.0, nan]], [[nan, 2.0]]])
        assert scan_nan(tensor) == 0

    def test_records_into_audit_log(self):
        audit = AuditLog()
        scan_nan(np.array([1.0, nan]), audit, name="demo")
        assert audit.nan_scan_results["demo"] == 1


class TestExplicitProbabilitySampling:
    def test_probabilities_are_mandatory(self):
        rng = np.random.default_rng(0)
        with pytest.raises(InvariantError):
            weighted_indices(rng, 3, probs=None, size=2)
        with pytest.raises(InvariantError):
            weighted_value(rng, [1.0, 2.0], probs=None)

    def test_rejects_invalid_vectors(self):
        rng = np.random.default_rng(0)
        for bad in ([0.5, 0.6], [0.5, -0.5, 1.0], [0.5, nan, 0.5], [1.0, 0.0]):
            with pytest.raises(InvariantError):
                weighted_indices(rng, len(bad), probs=bad, size=1)

    def test_rejects_length_mismatch(self):
        rng = np.random.default_rng(0)
        with pytest.raises(InvariantError):
            weighted_indices(rng, 3, probs=[0.5, 0.5], size=1)
        with pytest.raises(InvariantError):
            weighted_value(rng, [1.0, 2.0, 3.0], probs=[0.5, 0.5])

    def test_draws_respect_support(self):
        rng = np.random.default_rng(1)
        idx = weighted_indices(rng, 4, probs=[0.25] * 4, size=100)
        assert set(idx.tolist()) <= {0, 1, 2, 3}
        value = weighted_value(rng, [7.0], probs=[1.0])
        assert value == 7.0

    def test_audit_counts_every_call(self):
        audit = AuditLog()
        rng = np.random.default_rng(2)
        weighted_indices(rng, 2, probs=[0.5, 0.5], size=5, audit=audit)
        weighted_value(rng, [1.0, 2.0], probs=[0.5, 0.5], audit=audit)
        assert audit.sampling_calls == 2
        assert audit.explicit_probability_always


class TestAuditLog:
    def test_json_dump_round_trips(self):
        audit = AuditLog()
        audit.record_weight_regularity(0.42)
        audit.record_nan_scan("x", 0)
        payload = json.loads(audit.to_json())
        assert payload["weight_regularity"] == 0.42
        assert payload["nan_scan_results"] == {"x": 0}
        assert payload["explicit_probability_always"] is True
