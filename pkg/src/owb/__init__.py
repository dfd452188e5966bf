"""Ostrom-weighted bootstrap: variance-aware estimation and NaN-free imputation
for multi-agent voting panels.

Public surface re-exported here: the panel data model, hierarchical
variance pooling, precision weights, archetype estimators, the weighted
bootstrap, the donor-chain imputer, the panel simulator with its Monte
Carlo experiments, and the audit utilities.
"""

from .bootstrap import BootstrapConfig, BootstrapResult, derive_replicate_seed, weighted_bootstrap
from .diagnostics import AuditLog, scan_nan, weighted_indices, weighted_value
from .errors import (
    DataAssumptionError,
    DuplicateKey,
    EmptyPetal,
    InconsistentCluster,
    InvariantError,
    NoDataAnywhere,
    NonPositiveVariance,
    OwbError,
    ParseError,
    UsageError,
)
from .estimator import ArchetypeEstimate, estimate_archetype, estimate_uniform, posterior_mean_oracle
from .imputer import DonorPool, ImputationReport, build_donor_pool, impute
from .model import ClusterMap, PersonaSummary, VoteTensor, summarize
from .pipeline import FeasibleFit, fit_feasible
from .simulator import (
    GroundTruth,
    MonteCarloReport,
    ShrinkageReport,
    SimulationParams,
    generate,
    run_coverage_experiment,
    run_mse_experiment,
    run_shrinkage_experiment,
)
from .variance import PooledVariances, PoolingConfig, pool_variances
from .weights import (
    RegularityReport,
    WeightVector,
    check_weight_regularity,
    precision_weights,
    uniform_weights,
)

__version__ = "0.1.0"

__all__ = [
    "ArchetypeEstimate",
    "AuditLog",
    "BootstrapConfig",
    "BootstrapResult",
    "ClusterMap",
    "DataAssumptionError",
    "DonorPool",
    "DuplicateKey",
    "EmptyPetal",
    "FeasibleFit",
    "GroundTruth",
    "ImputationReport",
    "InconsistentCluster",
    "InvariantError",
    "MonteCarloReport",
    "NoDataAnywhere",
    "NonPositiveVariance",
    "OwbError",
    "ParseError",
    "PersonaSummary",
    "PooledVariances",
    "PoolingConfig",
    "RegularityReport",
    "ShrinkageReport",
    "SimulationParams",
    "UsageError",
    "VoteTensor",
    "WeightVector",
    "build_donor_pool",
    "check_weight_regularity",
    "derive_replicate_seed",
    "estimate_archetype",
    "estimate_uniform",
    "fit_feasible",
    "generate",
    "impute",
    "pool_variances",
    "posterior_mean_oracle",
    "precision_weights",
    "run_coverage_experiment",
    "run_mse_experiment",
    "run_shrinkage_experiment",
    "scan_nan",
    "summarize",
    "uniform_weights",
    "weighted_bootstrap",
    "weighted_indices",
    "weighted_value",
    "__version__",
]
