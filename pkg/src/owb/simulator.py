"""Synthetic panels from the hierarchical normal model, with known truth.

Votes are generated as mu_j + persona effect + cluster effect + round
noise, with independent normal components, so each persona's mean has the
known variance sigma_alpha^2 + sigma_gamma^2 + sigma^2 / n_p. The module
also hosts the desk-scale Monte Carlo experiments that compare estimator
mean squared errors, bootstrap CI coverage, and variance-pooling risk
against those closed forms.

The optional per-petal scale multiplies the round-noise variance only
(sigma^2 -> sigma^2 * scale_j); it is a generation-only device, and no
estimator anywhere tries to recover it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import seeds
from .bootstrap import BootstrapConfig, weighted_bootstrap
from .diagnostics import AuditLog, weighted_indices
from .errors import InvariantError
from .estimator import estimate_archetype, estimate_uniform
from .model import ClusterMap, PersonaSummary, VoteTensor, summarize
from .variance import PoolingConfig, pool_variances
from .weights import precision_weights


@dataclass(frozen=True)
class SimulationParams:
    mu: np.ndarray
    sigma_alpha2: float
    sigma_gamma2: float
    sigma2: float
    n_per_persona: tuple[int, ...]
    clusters: ClusterMap
    missing_rate: float = 0.0
    petal_scale: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        object.__setattr__(self, "mu", mu)
        mu.setflags(write=False)
        if mu.ndim != 1 or mu.size < 1:
            raise InvariantError("mu must be a nonempty vector")
        if self.sigma_alpha2 < 0 or self.sigma_gamma2 < 0 or not self.sigma2 > 0:
            raise InvariantError("need sigma_alpha2, sigma_gamma2 >= 0 and sigma2 > 0")
        if len(self.n_per_persona) != self.clusters.n_personas:
            raise InvariantError("n_per_persona length must match the cluster map")
        if any(n < 1 for n in self.n_per_persona):
            raise InvariantError("every persona needs at least one round")
        if not 0.0 <= self.missing_rate < 1.0:
            raise InvariantError("missing_rate must lie in [0, 1)")
        if self.petal_scale is not None:
            scale = np.asarray(self.petal_scale, dtype=np.float64)
            object.__setattr__(self, "petal_scale", scale)
            scale.setflags(write=False)
            if scale.shape != mu.shape or np.any(scale <= 0):
                raise InvariantError("petal_scale must be positive, one entry per petal")

    @property
    def n_personas(self) -> int:
        return self.clusters.n_personas

    @property
    def n_petals(self) -> int:
        return int(self.mu.size)

    def true_persona_variances(self) -> np.ndarray:
        """Known variance of each persona's petal mean (unit petal scale)."""
        n_p = np.asarray(self.n_per_persona, dtype=np.float64)
        return self.sigma_alpha2 + self.sigma_gamma2 + self.sigma2 / n_p


@dataclass(frozen=True)
class GroundTruth:
    """Latent draws and derived quantities recorded at generation time."""

    mu: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    v_true: np.ndarray
    repaired_cells: tuple[tuple[int, int, int], ...]


def generate(params: SimulationParams) -> tuple[VoteTensor, GroundTruth]:
    """Draw one panel plus its ground truth record.

    Missingness is applied i.i.d. at ``missing_rate`` and then repaired
    minimally: if a petal loses every observation, one uniformly chosen
    cell of that petal is restored (with an explicit equal-probability
    vector) and recorded, so the output always satisfies the minimal-data
    requirement.
    """
    rng = seeds.derive_rng(params.seed, seeds.NS_SIMULATE)
    n = params.n_personas
    n_petals = params.n_petals
    rounds = np.asarray(params.n_per_persona, dtype=np.int64)
    total = int(rounds.sum())
    scale = params.petal_scale if params.petal_scale is not None else np.ones(n_petals)

    alpha = rng.normal(0.0, np.sqrt(params.sigma_alpha2), size=n)
    gamma = rng.normal(0.0, np.sqrt(params.sigma_gamma2), size=params.clusters.n_clusters)
    eps = rng.normal(0.0, 1.0, size=(total, n_petals)) * np.sqrt(params.sigma2 * scale)

    persona_of_row = np.repeat(np.arange(n), rounds)
    offset = alpha + gamma[params.clusters.assignment]
    values = params.mu[None, :] + offset[persona_of_row, None] + eps

    if params.missing_rate > 0.0:
        mask = rng.random(size=(total, n_petals)) >= params.missing_rate
    else:
        mask = np.ones((total, n_petals), dtype=bool)

    repaired: list[tuple[int, int, int]] = []
    row_start = np.concatenate(([0], np.cumsum(rounds)[:-1]))
    for j in range(n_petals):
        if not mask[:, j].any():
            probs = np.full(total, 1.0 / total)
            row = int(weighted_indices(rng, total, probs=probs, size=1)[0])
            mask[row, j] = True
            p = int(persona_of_row[row])
            repaired.append((p, int(row - row_start[p]), j))

    values = np.where(mask, values, 0.0)
    bounds = np.cumsum(rounds)[:-1]
    tensor = VoteTensor(
        values=tuple(_readonly(v) for v in np.split(values, bounds)),
        mask=tuple(_readonly(m) for m in np.split(mask, bounds)),
    )
    truth = GroundTruth(
        mu=params.mu,
        alpha=_readonly(alpha),
        gamma=_readonly(gamma),
        v_true=_readonly(params.true_persona_variances()),
        repaired_cells=tuple(repaired),
    )
    return tensor, truth


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MonteCarloReport:
    """Aggregated experiment outcomes; fields unused by an experiment are None."""

    n_sims: int
    mse_owb_ideal: np.ndarray | None = None
    mse_owb_feasible: np.ndarray | None = None
    mse_uniform: np.ndarray | None = None
    analytic_owb_variance: float | None = None
    analytic_uniform_variance: float | None = None
    analytic_variance_ratio: float | None = None
    empirical_coverage: np.ndarray | None = None
    ci_level: float | None = None
    not_applicable: bool = False

    def aggregate(self, per_petal: np.ndarray | None) -> float | None:
        return None if per_petal is None else float(np.mean(per_petal))


def _feasible_estimate(summary: PersonaSummary, clusters: ClusterMap, pooling: PoolingConfig):
    pooled = pool_variances(summary, clusters, pooling)
    wv = precision_weights(pooled.v_eff, "feasible")
    return estimate_archetype(summary, wv), wv, pooled


def run_mse_experiment(
    params: SimulationParams,
    n_sims: int,
    pooling: PoolingConfig = PoolingConfig(),
) -> MonteCarloReport:
    """Compare ideal, feasible, and uniform estimators on fresh panels.

    Ideal weights come from the known persona variances; feasible weights
    from the full summarize/pool/weight pipeline. MSEs are per petal
    against the true archetype, averaged over ``n_sims`` panels. The report
    also carries both sides of the known-variance comparison: the best
    achievable weighted variance 1/sum(1/v) and the uniform-weight variance
    (1/N^2) sum(v).
    """
    n_petals = params.n_petals
    sq_ideal = np.zeros(n_petals)
    sq_feasible = np.zeros(n_petals)
    sq_uniform = np.zeros(n_petals)
    for s in range(n_sims):
        sim_seed = seeds.derive_child_seed_int(params.seed, seeds.NS_EXPERIMENT, 0, s)
        tensor, truth = generate(replace(params, seed=sim_seed))
        summary = summarize(tensor)
        est_ideal = estimate_archetype(summary, precision_weights(truth.v_true, "ideal"))
        est_feasible, _, _ = _feasible_estimate(summary, params.clusters, pooling)
        est_uniform = estimate_uniform(summary)
        sq_ideal += (est_ideal.mu_hat - params.mu) ** 2
        sq_feasible += (est_feasible.mu_hat - params.mu) ** 2
        sq_uniform += (est_uniform.mu_hat - params.mu) ** 2

    v = params.true_persona_variances()
    owb_var = 1.0 / float(np.sum(1.0 / v))
    uni_var = float(np.sum(v)) / params.n_personas**2
    return MonteCarloReport(
        n_sims=n_sims,
        mse_owb_ideal=_readonly(sq_ideal / n_sims),
        mse_owb_feasible=_readonly(sq_feasible / n_sims),
        mse_uniform=_readonly(sq_uniform / n_sims),
        analytic_owb_variance=owb_var,
        analytic_uniform_variance=uni_var,
        analytic_variance_ratio=owb_var / uni_var,
    )


def run_coverage_experiment(
    params: SimulationParams,
    n_sims: int,
    ci_level: float = 0.90,
    replicates: int = 1000,
    pooling: PoolingConfig = PoolingConfig(),
    audit: AuditLog | None = None,
) -> MonteCarloReport:
    """Empirical coverage of bootstrap CIs from the feasible pipeline.

    Per panel: fit the feasible estimate, bootstrap it, and record per
    petal whether the true archetype coordinate falls inside the interval.
    A single-persona design collapses the interval to a point and is
    reported with ``not_applicable=True``.
    """
    covered = np.zeros(params.n_petals)
    for s in range(n_sims):
        sim_seed = seeds.derive_child_seed_int(params.seed, seeds.NS_EXPERIMENT, 1, s)
        tensor, _ = generate(replace(params, seed=sim_seed))
        summary = summarize(tensor)
        _, wv, _ = _feasible_estimate(summary, params.clusters, pooling)
        boot = weighted_bootstrap(
            summary,
            wv,
            BootstrapConfig(replicates=replicates, ci_level=ci_level, seed=sim_seed),
            audit=audit,
        )
        for j, (lo, hi) in enumerate(boot.ci):
            covered[j] += float(lo <= params.mu[j] <= hi)
    return MonteCarloReport(
        n_sims=n_sims,
        empirical_coverage=_readonly(covered / n_sims),
        ci_level=ci_level,
        not_applicable=params.n_personas == 1,
    )


@dataclass(frozen=True)
class ShrinkageReport:
    """Risk of pooled vs raw variance estimates against the known truth."""

    mse_pooled: float
    mse_raw: float
    ratio: float
    n_sims: int


def run_shrinkage_experiment(
    params: SimulationParams,
    n_sims: int,
    pooling: PoolingConfig = PoolingConfig(),
    lambda_override: float | None = None,
) -> ShrinkageReport:
    """Mean squared error of pooled vs raw variance proxies.

    Compares E[(v_eff - v_true)^2] to E[(v_raw - v_true)^2] over personas
    whose raw estimate is defined. ``lambda_override`` pins the
    persona-level blend (0 disables pooling entirely, making the ratio
    exactly 1; 1 forces the cluster pool onto everyone).
    """
    sq_pooled = 0.0
    sq_raw = 0.0
    count = 0
    for s in range(n_sims):
        sim_seed = seeds.derive_child_seed_int(params.seed, seeds.NS_EXPERIMENT, 2, s)
        tensor, truth = generate(replace(params, seed=sim_seed))
        summary = summarize(tensor)
        pooled = pool_variances(summary, params.clusters, pooling, lambda_override=lambda_override)
        defined = summary.trace_defined
        if not defined.any():
            continue
        err_pooled = pooled.v_eff[defined] - truth.v_true[defined]
        err_raw = summary.raw_trace_var[defined] - truth.v_true[defined]
        sq_pooled += float((err_pooled**2).sum())
        sq_raw += float((err_raw**2).sum())
        count += int(defined.sum())
    if count == 0:
        raise InvariantError("no persona ever had a defined raw variance")
    mse_pooled = sq_pooled / count
    mse_raw = sq_raw / count
    return ShrinkageReport(
        mse_pooled=mse_pooled, mse_raw=mse_raw, ratio=mse_pooled / mse_raw, n_sims=n_sims
    )
