"""Runtime audit utilities: explicit-probability sampling and NaN scanning.

Every random draw in the package goes through :func:`weighted_indices` or
:func:`weighted_value`. Both *require* a probability vector (there is no
overload that falls back to uniform sampling) and both assert that the
vector is finite, strictly positive, and sums to 1 before drawing. The
optional :class:`AuditLog` double-checks the same facts at runtime and can
be dumped as JSON for inspection.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantError

PROB_SUM_TOL = 1e-9


@dataclass
class AuditLog:
    """Append-only record of sampling calls and NaN scans for one run."""

    sampling_calls: int = 0
    explicit_probability_always: bool = True
    nan_scan_results: dict[str, int] = field(default_factory=dict)
    weight_regularity: float | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def record_sampling(self, probs) -> None:
        with self._lock:
            self.sampling_calls += 1
            if probs is None:
                # Unreachable through the public helpers; kept as the audited
                # backstop for the no-implicit-uniform prohibition.
                self.explicit_probability_always = False
                raise InvariantError("sampling call recorded without probabilities")

    def record_nan_scan(self, name: str, count: int) -> None:
        with self._lock:
            self.nan_scan_results[name] = count

    def record_weight_regularity(self, value: float) -> None:
        with self._lock:
            self.weight_regularity = value

    def to_json(self) -> str:
        with self._lock:
            payload = {
                "sampling_calls": self.sampling_calls,
                "explicit_probability_always": self.explicit_probability_always,
                "nan_scan_results": dict(self.nan_scan_results),
                "weight_regularity": self.weight_regularity,
            }
        return json.dumps(payload, indent=2, sort_keys=True)


def check_probabilities(probs: np.ndarray) -> np.ndarray:
    """Validate an explicit probability vector; returns it as float64."""
    if probs is None:
        raise InvariantError("probability vector is required, got None")
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise InvariantError(f"probability vector must be 1-D nonempty, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvariantError("probability vector contains non-finite entries")
    if np.any(p <= 0.0):
        raise InvariantError("probability vector contains non-positive entries")
    total = float(p.sum())
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise InvariantError(f"probability vector sums to {total!r}, not 1")
    return p


def weighted_indices(
    rng: np.random.Generator,
    n: int,
    probs,
    size: int,
    audit: AuditLog | None = None,
) -> np.ndarray:
    """Draw ``size`` indices from ``range(n)`` with explicit probabilities."""
    p = check_probabilities(probs)
    if p.size != n:
        raise InvariantError(f"probability vector length {p.size} != population {n}")
    if audit is not None:
        audit.record_sampling(p)
    return rng.choice(n, size=size, replace=True, p=p)


def weighted_value(
    rng: np.random.Generator,
    values,
    probs,
    audit: AuditLog | None = None,
) -> float:
    """Draw one value from ``values`` with explicit probabilities."""
    vals = np.asarray(values, dtype=np.float64)
    p = check_probabilities(probs)
    if p.size != vals.size:
        raise InvariantError(f"probability vector length {p.size} != pool size {vals.size}")
    if audit is not None:
        audit.record_sampling(p)
    idx = rng.choice(vals.size, p=p)
    return float(vals[idx])


def scan_nan(artifact, audit: AuditLog | None = None, name: str = "artifact") -> int:
    """Exact count of NaN/infinity entries in an artifact.

    Accepts a plain array (all entries scanned), a (values, mask) pair, or
    any object exposing ``values``/``mask`` sequences of per-persona arrays
    (scanned under the mask, so structurally-missing cells do not count).
    """
    values = getattr(artifact, "values", None)
    mask = getattr(artifact, "mask", None)
    if isinstance(artifact, tuple) and len(artifact) == 2:
        values, mask = artifact
    if values is not None and mask is not None:
        count = 0
        for vals, msk in zip(values, mask):
            v = np.asarray(vals, dtype=np.float64)
            m = np.asarray(msk, dtype=bool)
            count += int(np.count_nonzero(m & ~np.isfinite(v)))
    else:
        arr = np.asarray(artifact, dtype=np.float64)
        count = int(np.count_nonzero(~np.isfinite(arr)))
    if audit is not None:
        audit.record_nan_scan(name, count)
    return count
