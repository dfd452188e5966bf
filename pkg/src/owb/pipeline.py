"""End-to-end feasible fit: summarize -> pool -> weight -> estimate."""

from __future__ import annotations

from dataclasses import dataclass

from .estimator import ArchetypeEstimate, estimate_archetype
from .model import ClusterMap, PersonaSummary, VoteTensor, summarize
from .variance import PooledVariances, PoolingConfig, pool_variances
from .weights import RegularityReport, WeightVector, check_weight_regularity, precision_weights

DEFAULT_REGULARITY_DELTA = 0.01


@dataclass(frozen=True)
class FeasibleFit:
    """Everything the feasible pipeline produced for one panel."""

    summary: PersonaSummary
    pooled: PooledVariances
    weights: WeightVector
    estimate: ArchetypeEstimate
    regularity: RegularityReport


def fit_feasible(
    tensor: VoteTensor,
    clusters: ClusterMap,
    pooling: PoolingConfig = PoolingConfig(),
    regularity_delta: float = DEFAULT_REGULARITY_DELTA,
) -> FeasibleFit:
    """Run the full variance-weighted pipeline on an observed panel."""
    summary = summarize(tensor)
    pooled = pool_variances(summary, clusters, pooling)
    wv = precision_weights(pooled.v_eff, "feasible")
    estimate = estimate_archetype(summary, wv)
    regularity = check_weight_regularity(wv, regularity_delta)
    return FeasibleFit(
        summary=summary, pooled=pooled, weights=wv, estimate=estimate, regularity=regularity
    )
