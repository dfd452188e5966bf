"""Normalized precision weights and the weight-regularity diagnostic.

Weights are inverse variances normalized to sum to 1: w_p = v_p^{-1} /
sum_q v_q^{-1}. The same formula serves the ideal case (true variances)
and the feasible case (pooled estimates). A weight vector is always a
materialized array of explicit probabilities; nothing downstream is
allowed to treat "uniform" as an implicit default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvariantError, NonPositiveVariance

WEIGHT_SUM_TOL = 1e-12

KINDS = ("ideal", "feasible", "uniform")


@dataclass(frozen=True)
class WeightVector:
    """Explicit persona resampling/averaging probabilities.

    ``min_weight_ratio`` is N * min_p w_p, the empirical counterpart of the
    regularity ratio used to certify that no persona is effectively dropped.
    """

    w: np.ndarray
    kind: str
    min_weight_ratio: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvariantError(f"unknown weight kind {self.kind!r}")
        w = self.w
        if w.ndim != 1 or w.size == 0:
            raise InvariantError("weights must form a nonempty vector")
        if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
            raise InvariantError("weights must be finite and strictly positive")
        if abs(math.fsum(w.tolist()) - 1.0) > WEIGHT_SUM_TOL:
            raise InvariantError("weights must sum to 1")
        w.setflags(write=False)

    @property
    def n(self) -> int:
        return int(self.w.size)


def precision_weights(variances, kind: str) -> WeightVector:
    """Inverse-variance weights, normalized in one pass.

    Precisions 1/v are summed with compensated (extended-precision)
    summation and renormalized once at the end so the total is pinned to 1.
    Raises :class:`NonPositiveVariance` on any v <= 0; upstream flooring
    is supposed to make that impossible.
    """
    v = np.asarray(variances, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvariantError("variance vector must be 1-D nonempty")
    bad = np.nonzero(~(v > 0.0) | ~np.isfinite(v))[0]
    if bad.size:
        raise NonPositiveVariance(int(bad[0]), float(v[bad[0]]))
    prec = 1.0 / v
    total = math.fsum(prec.tolist())
    w = prec / total
    w = w / math.fsum(w.tolist())
    return WeightVector(w=w, kind=kind, min_weight_ratio=float(w.size * w.min()))


def uniform_weights(n: int) -> WeightVector:
    """Materialized equal weights over n personas (never an implicit default)."""
    if n < 1:
        raise InvariantError("need at least one persona")
    return WeightVector(w=np.full(n, 1.0 / n), kind="uniform", min_weight_ratio=1.0)


@dataclass(frozen=True)
class RegularityReport:
    """Outcome of the smallest-weight check: is N * min w >= delta?"""

    passed: bool
    value: float
    threshold: float
    n: int


def check_weight_regularity(wv: WeightVector, delta: float) -> RegularityReport:
    """Advisory check that the smallest weight stays above delta / N.

    Estimation proceeds regardless of the outcome; the report exists so a
    run can document that pooling kept every persona's weight well away
    from the 1/N^2 danger zone.
    """
    if not 0.0 < delta <= 1.0:
        raise InvariantError("delta must lie in (0, 1]")
    value = float(wv.n * wv.w.min())
    return RegularityReport(passed=value >= delta, value=value, threshold=delta, n=wv.n)
