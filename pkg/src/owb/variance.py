"""Hierarchical variance pooling: persona -> cluster -> global shrinkage.

Raw per-persona variance proxies are noisy when round counts are small.
This module blends each persona's estimate toward its cluster pool, and
each cluster pool toward the global pool, with data-adaptive weights
lambda = m / (df + m) driven by pseudo-count prior strengths. Personas
with no local information shrink fully (lambda = 1). Output variances are
floored at a small epsilon so they are always invertible, in every branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvariantError
from .model import ClusterMap, PersonaSummary


@dataclass(frozen=True)
class PoolingConfig:
    """Prior strengths (pseudo degrees of freedom) and the variance floor."""

    prior_strength_persona: float = 5.0
    prior_strength_cluster: float = 5.0
    variance_floor: float = 1e-12

    def __post_init__(self):
        if not (self.prior_strength_persona > 0 and self.prior_strength_cluster > 0):
            raise InvariantError("prior strengths must be positive")
        if not self.variance_floor > 0:
            raise InvariantError("variance floor must be positive")


@dataclass(frozen=True)
class PooledVariances:
    """Shrunken effective variances and the pooling weights that made them.

    ``v_eff`` is strictly positive everywhere. ``v_cluster`` holds the raw
    df-weighted cluster pools (global value substituted where a cluster has
    no degrees of freedom); ``lambda_cluster`` the cluster-to-global blend
    weights. ``degenerate`` is True when no persona anywhere had a defined
    raw estimate, in which case every v_eff equals the floor.
    """

    v_eff: np.ndarray
    lambda_persona: np.ndarray
    v_cluster: np.ndarray
    v_cluster_shrunk: np.ndarray
    v_global: float
    lambda_cluster: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        for name in ("v_eff", "lambda_persona", "v_cluster", "v_cluster_shrunk", "lambda_cluster"):
            getattr(self, name).setflags(write=False)


def pool_variances(
    summary: PersonaSummary,
    clusters: ClusterMap,
    cfg: PoolingConfig = PoolingConfig(),
    lambda_override: float | None = None,
) -> PooledVariances:
    """Blend raw persona variance proxies through cluster and global pools.

    The global pool is the df-weighted mean of all defined raw estimates;
    each cluster pool is the df-weighted mean within the cluster, shrunk
    toward the global pool with weight m_cluster / (D_c + m_cluster); each
    persona blends its raw estimate toward its shrunk cluster pool with
    weight m_persona / (d_p + m_persona). Undefined estimates (zero df)
    shrink fully. Everything is floored at ``cfg.variance_floor``.

    ``lambda_override`` pins the persona-level blend weight to a constant
    (for personas with a defined raw estimate), used by pooling-on/off
    experiments; cluster-level shrinkage is unchanged.

    When no persona anywhere has any degrees of freedom the result is
    degenerate: all effective variances equal the floor (weights downstream
    become exactly equal) and ``degenerate`` is flagged, never a NaN.
    """
    if clusters.n_personas != summary.n_personas:
        raise InvariantError("cluster map and summary persona counts differ")
    m0 = cfg.prior_strength_persona
    m1 = cfg.prior_strength_cluster
    floor = cfg.variance_floor
    n = summary.n_personas
    c_count = clusters.n_clusters
    df = summary.df.astype(np.float64)
    defined = summary.trace_defined
    raw = np.where(defined, summary.raw_trace_var, 0.0)

    total_df = float(df.sum())
    if total_df <= 0.0:
        return PooledVariances(
            v_eff=np.full(n, floor),
            lambda_persona=np.ones(n),
            v_cluster=np.full(c_count, floor),
            v_cluster_shrunk=np.full(c_count, floor),
            v_global=floor,
            lambda_cluster=np.ones(c_count),
            degenerate=True,
        )

    v_global = float((df * raw).sum() / total_df)

    cluster_df = np.zeros(c_count)
    cluster_wsum = np.zeros(c_count)
    np.add.at(cluster_df, clusters.assignment, df)
    np.add.at(cluster_wsum, clusters.assignment, df * raw)
    has_df = cluster_df > 0
    v_cluster = np.where(has_df, cluster_wsum / np.maximum(cluster_df, 1.0), v_global)
    lambda_cluster = np.where(has_df, m1 / (cluster_df + m1), 1.0)
    v_cluster_shrunk = (1.0 - lambda_cluster) * v_cluster + lambda_cluster * v_global

    lam = np.where(defined, m0 / (df + m0), 1.0)
    if lambda_override is not None:
        if not 0.0 <= lambda_override <= 1.0:
            raise InvariantError("lambda_override must lie in [0, 1]")
        lam = np.where(defined, lambda_override, 1.0)
    target = v_cluster_shrunk[clusters.assignment]
    v_eff = (1.0 - lam) * raw + lam * target
    v_eff = np.maximum(v_eff, floor)

    return PooledVariances(
        v_eff=v_eff,
        lambda_persona=lam,
        v_cluster=v_cluster,
        v_cluster_shrunk=v_cluster_shrunk,
        v_global=v_global,
        lambda_cluster=lambda_cluster,
    )
