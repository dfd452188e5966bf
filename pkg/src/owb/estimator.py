"""Archetype point estimation: weighted, uniform, and the posterior-mean oracle.

The archetype estimate for petal j is a convex combination of the persona
means observed on that petal. Under missingness the weights are
renormalized over the contributing personas per petal, so each petal's
weights still sum to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyPetal, InvariantError, NonPositiveVariance
from .model import PersonaSummary
from .weights import WeightVector, uniform_weights

_METHOD_BY_KIND = {"ideal": "owb_ideal", "feasible": "owb_feasible", "uniform": "uniform"}


@dataclass(frozen=True)
class ArchetypeEstimate:
    """Per-petal point estimates with the weights that produced them.

    ``per_petal_personas[j]`` lists the contributing persona indices for
    petal j; ``ci`` is filled in by the bootstrap stage when requested.
    """

    mu_hat: np.ndarray
    weights_used: WeightVector
    per_petal_personas: tuple[tuple[int, ...], ...]
    method: str
    ci: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        self.mu_hat.setflags(write=False)

    @property
    def n_petals(self) -> int:
        return int(self.mu_hat.size)

    def with_ci(self, ci: tuple[tuple[float, float], ...]) -> "ArchetypeEstimate":
        return ArchetypeEstimate(
            mu_hat=self.mu_hat.copy(),
            weights_used=self.weights_used,
            per_petal_personas=self.per_petal_personas,
            method=self.method,
            ci=ci,
        )


def estimate_archetype(summary: PersonaSummary, wv: WeightVector) -> ArchetypeEstimate:
    """Weighted mean of persona means, renormalized per petal.

    For petal j with contributor set S_j (personas with >= 1 observation),
    mu_hat_j = sum_{p in S_j} w_p beta_bar_{p,j} / sum_{q in S_j} w_q.
    Raises :class:`EmptyPetal` if some petal has no contributor at all.
    """
    if wv.n != summary.n_personas:
        raise InvariantError("weight vector and summary persona counts differ")
    n_petals = summary.n_petals
    mu = np.zeros(n_petals, dtype=np.float64)
    contributors: list[tuple[int, ...]] = []
    for j in range(n_petals):
        s_j = summary.contributors(j)
        if s_j.size == 0:
            raise EmptyPetal(j)
        w_sub = wv.w[s_j]
        w_sub = w_sub / w_sub.sum()
        mu[j] = float(w_sub @ summary.means[s_j, j])
        contributors.append(tuple(int(p) for p in s_j))
    return ArchetypeEstimate(
        mu_hat=mu,
        weights_used=wv,
        per_petal_personas=tuple(contributors),
        method=_METHOD_BY_KIND[wv.kind],
    )


def estimate_uniform(summary: PersonaSummary) -> ArchetypeEstimate:
    """Equal-weight baseline, with the 1/N vector materialized explicitly."""
    return estimate_archetype(summary, uniform_weights(summary.n_personas))


def posterior_mean_oracle(
    persona_means_for_petal,
    variances,
    prior_variance: float = math.inf,
) -> float:
    """Conjugate-normal posterior mean of one petal's archetype coordinate.

    With observations m_p ~ Normal(mu, v_p) and prior mu ~ Normal(0, tau^2),
    returns (sum_p m_p / v_p) / (sum_p 1 / v_p + 1 / tau^2); the flat-prior
    marker ``prior_variance=inf`` drops the prior term, which reduces to the
    inverse-variance weighted mean. This is the independent cross-check for
    the weighted point estimator, not a production path.
    """
    m = np.asarray(persona_means_for_petal, dtype=np.float64)
    v = np.asarray(variances, dtype=np.float64)
    if m.shape != v.shape or m.ndim != 1 or m.size == 0:
        raise InvariantError("means and variances must be matching 1-D vectors")
    bad = np.nonzero(~(v > 0.0) | ~np.isfinite(v))[0]
    if bad.size:
        raise NonPositiveVariance(int(bad[0]), float(v[bad[0]]))
    if not prior_variance > 0.0:
        raise InvariantError("prior variance must be positive (inf = flat prior)")
    prior_precision = 0.0 if math.isinf(prior_variance) else 1.0 / prior_variance
    num = math.fsum((m / v).tolist())  # prior mean is 0, so no prior term here
    den = math.fsum((1.0 / v).tolist()) + prior_precision
    return num / den
