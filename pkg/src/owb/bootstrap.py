"""Weighted bootstrap over personas with percentile confidence intervals.

Each replicate redraws N personas i.i.d. from the explicit weight vector
(the probabilities are always passed; there is no uniform-sampling code
path) and averages the drawn persona means per petal. The replicate
statistic's expectation is exactly the weighted point estimate, so the
replicate spread approximates the estimator's sampling distribution.
Replicates run on independent derived streams, so results are
bit-reproducible and order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import seeds
from .diagnostics import AuditLog, weighted_indices
from .errors import EmptyPetal, InvariantError
from .estimator import estimate_archetype
from .model import PersonaSummary
from .weights import WeightVector


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 2000
    ci_level: float = 0.90
    seed: int = 0

    def __post_init__(self):
        if self.replicates < 1:
            raise InvariantError("need at least one replicate")
        if not 0.0 < self.ci_level < 1.0:
            raise InvariantError("ci_level must lie in (0, 1)")


@dataclass(frozen=True)
class BootstrapResult:
    """Replicate archetype values, percentile CIs, and replicate SDs.

    ``fallback_count[j]`` counts replicates in which no drawn persona
    observed petal j and the point estimate was substituted; the event has
    vanishing probability at moderate sizes but is accounted for explicitly.
    """

    replicate_mu: np.ndarray
    ci: tuple[tuple[float, float], ...]
    se: np.ndarray
    fallback_count: np.ndarray

    def __post_init__(self):
        for name in ("replicate_mu", "se", "fallback_count"):
            getattr(self, name).setflags(write=False)

    @property
    def n_replicates(self) -> int:
        return int(self.replicate_mu.shape[0])


def derive_replicate_seed(master_seed: int, replicate_index: int) -> np.random.SeedSequence:
    """Stream seed for one replicate: counter-mode split of the master seed.

    Identical (master_seed, replicate_index) always produce the identical
    stream; distinct indices produce independent streams.
    """
    return seeds.derive_seed(master_seed, seeds.NS_BOOTSTRAP, replicate_index)


def weighted_bootstrap(
    summary: PersonaSummary,
    wv: WeightVector,
    cfg: BootstrapConfig,
    audit: AuditLog | None = None,
) -> BootstrapResult:
    """Resample personas with probabilities ``wv.w`` and form percentile CIs.

    Per replicate, N persona indices are drawn i.i.d. from the weight
    vector; the petal-j replicate value is the plain mean of the drawn
    persona means over draws that observe petal j (draws lacking the petal
    are skipped; if all drawn personas lack it, the full-weight point
    estimate fills that replicate cell). Percentile intervals are taken at
    (1 - ci_level)/2 and 1 - (1 - ci_level)/2 per petal.
    """
    if wv.n != summary.n_personas:
        raise InvariantError("weight vector and summary persona counts differ")
    for j in range(summary.n_petals):
        if summary.contributors(j).size == 0:
            raise EmptyPetal(j)

    n = summary.n_personas
    n_petals = summary.n_petals
    b_total = cfg.replicates
    point = estimate_archetype(summary, wv).mu_hat
    observed = summary.counts >= 1

    replicate_mu = np.empty((b_total, n_petals), dtype=np.float64)
    fallback_count = np.zeros(n_petals, dtype=np.int64)
    for b in range(b_total):
        rng = np.random.default_rng(derive_replicate_seed(cfg.seed, b))
        idx = weighted_indices(rng, n, probs=wv.w, size=n, audit=audit)
        obs_draw = observed[idx]
        cnt = obs_draw.sum(axis=0)
        sums = np.where(obs_draw, summary.means[idx], 0.0).sum(axis=0)
        empty = cnt == 0
        replicate_mu[b] = np.where(empty, point, sums / np.maximum(cnt, 1))
        fallback_count += empty

    lo_q = (1.0 - cfg.ci_level) / 2.0
    bounds = np.quantile(replicate_mu, [lo_q, 1.0 - lo_q], axis=0)
    ci = tuple((float(lo), float(hi)) for lo, hi in bounds.T)
    if b_total >= 2:
        se = replicate_mu.std(axis=0, ddof=1)
    else:
        se = np.zeros(n_petals, dtype=np.float64)
    return BootstrapResult(
        replicate_mu=replicate_mu, ci=ci, se=se, fallback_count=fallback_count
    )
