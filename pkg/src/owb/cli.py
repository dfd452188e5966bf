"""Command-line front end.

Subcommands: validate, estimate, impute, bootstrap-ci, simulate, bench.
Exit codes: 0 success, 1 usage error, 2 data-assumption violation,
3 internal invariant failure. Every emitted numeric artifact is NaN-scanned
before any file is finalized, and all writes are atomic.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import figures, io
from .bootstrap import BootstrapConfig, weighted_bootstrap
from .diagnostics import AuditLog, scan_nan
from .errors import DataAssumptionError, InvariantError, OwbError, UsageError
from .imputer import impute
from .model import ClusterMap, VoteTensor
from .pipeline import DEFAULT_REGULARITY_DELTA, FeasibleFit, fit_feasible
from .simulator import (
    generate,
    run_coverage_experiment,
    run_mse_experiment,
    run_shrinkage_experiment,
)
from .variance import PoolingConfig


@dataclass(frozen=True)
class RunConfig:
    """Resolved knobs for one command: defaults < config file < flags."""

    pooling: PoolingConfig
    bootstrap: BootstrapConfig
    validate_min_data: bool = True
    regularity_delta: float = DEFAULT_REGULARITY_DELTA


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def build_run_config(args: argparse.Namespace) -> RunConfig:
    cfg = io.parse_kv_config(args.config) if getattr(args, "config", None) else {}

    def pick(flag_value, key: str, default, conv):
        if flag_value is not None:
            return flag_value
        if key in cfg:
            try:
                return conv(cfg[key])
            except ValueError as exc:
                raise UsageError(f"config key {key}: {exc}") from exc
        return default

    try:
        pooling = PoolingConfig(
            prior_strength_persona=pick(
                args.prior_strength_persona, "prior_strength_persona", 5.0, float
            ),
            prior_strength_cluster=pick(
                args.prior_strength_cluster, "prior_strength_cluster", 5.0, float
            ),
            variance_floor=pick(args.variance_floor, "variance_floor", 1e-12, float),
        )
        bootstrap = BootstrapConfig(
            replicates=pick(args.replicates, "replicates", 2000, int),
            ci_level=pick(args.ci_level, "ci_level", 0.90, float),
            seed=pick(args.seed, "seed", 0, int),
        )
    except InvariantError as exc:
        raise UsageError(str(exc)) from exc
    validate = pick(None, "validate_min_data", True, _parse_bool)
    if args.no_validate:
        validate = False
    delta = pick(None, "regularity_delta", DEFAULT_REGULARITY_DELTA, float)
    return RunConfig(pooling=pooling, bootstrap=bootstrap, validate_min_data=validate,
                     regularity_delta=delta)


def _check_min_data(tensor: VoteTensor, ids: io.IdTables) -> list[str]:
    counts = tensor.petal_observation_counts()
    return [ids.petals[j] for j in np.nonzero(counts == 0)[0]]


def _require_min_data(tensor: VoteTensor, ids: io.IdTables) -> None:
    offenders = _check_min_data(tensor, ids)
    if offenders:
        raise DataAssumptionError(
            "petals with no finite observations: " + ", ".join(offenders)
        )


def _fit(tensor: VoteTensor, clusters: ClusterMap, run: RunConfig, ids: io.IdTables) -> FeasibleFit:
    if run.validate_min_data:
        _require_min_data(tensor, ids)
    return fit_feasible(tensor, clusters, run.pooling, run.regularity_delta)


def _gate_nan(count: int, what: str) -> None:
    if count != 0:
        raise InvariantError(f"{what} contains {count} non-finite entries")


def cmd_validate(args: argparse.Namespace) -> int:
    tensor, _, ids = io.ingest(args.votes)
    counts = tensor.petal_observation_counts()
    for j, qid in enumerate(ids.petals):
        print(f"{qid}: {int(counts[j])} finite observations")
    offenders = [ids.petals[j] for j in np.nonzero(counts == 0)[0]]
    if offenders:
        print(
            f"error[empty-petal]: petals with no finite observations: {', '.join(offenders)}",
            file=sys.stderr,
        )
        return 2
    print(f"ok: {len(ids.petals)} petals, {len(ids.personas)} personas, "
          f"{tensor.total_observed()} finite cells")
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    run = build_run_config(args)
    audit = AuditLog()
    tensor, clusters, ids = io.ingest(args.votes)
    fit = _fit(tensor, clusters, run, ids)
    audit.record_weight_regularity(fit.regularity.value)
    nan_total = scan_nan(fit.estimate.mu_hat, audit, "mu_hat")
    nan_total += scan_nan(fit.weights.w, audit, "weights")
    nan_total += scan_nan(fit.pooled.v_eff, audit, "v_eff")
    nan_total += scan_nan(fit.pooled.lambda_persona, audit, "lambda_persona")
    _gate_nan(nan_total, "estimate output")
    payload = io.archetype_payload(fit, ids, nan_scan_count=nan_total)
    io.write_json(args.output, payload)
    if args.verbose:
        print(audit.to_json(), file=sys.stderr)
    print(f"wrote {args.output}")
    return 0


def cmd_bootstrap_ci(args: argparse.Namespace) -> int:
    run = build_run_config(args)
    audit = AuditLog()
    tensor, clusters, ids = io.ingest(args.votes)
    fit = _fit(tensor, clusters, run, ids)
    audit.record_weight_regularity(fit.regularity.value)
    boot = weighted_bootstrap(fit.summary, fit.weights, run.bootstrap, audit=audit)
    fit = replace(fit, estimate=fit.estimate.with_ci(boot.ci))
    nan_total = scan_nan(fit.estimate.mu_hat, audit, "mu_hat")
    nan_total += scan_nan(boot.replicate_mu, audit, "replicates")
    nan_total += scan_nan(boot.se, audit, "se")
    _gate_nan(nan_total, "bootstrap output")
    payload = io.archetype_payload(fit, ids, boot=boot, boot_cfg=run.bootstrap,
                                   nan_scan_count=nan_total)
    io.write_json(args.output, payload)
    if args.verbose:
        print(audit.to_json(), file=sys.stderr)
    print(f"wrote {args.output}")
    return 0


def cmd_impute(args: argparse.Namespace) -> int:
    run = build_run_config(args)
    tensor, clusters, ids = io.ingest(args.votes)
    fit = fit_feasible(tensor, clusters, run.pooling, run.regularity_delta)
    out = Path(args.output)
    report_path = Path(args.report) if args.report else out.with_suffix(".report.json")
    for m in range(args.multiple):
        audit = AuditLog()
        seed = run.bootstrap.seed + m
        report = impute(tensor, clusters, fit.weights, seed, audit=audit, trace=args.verbose)
        nan_total = scan_nan(report.completed, audit, "completed")
        _gate_nan(nan_total, "completed tensor")
        if args.multiple > 1:
            csv_path = out.with_name(f"{out.stem}.{m}{out.suffix}")
            json_path = report_path.with_name(f"{report_path.stem}.{m}{report_path.suffix}")
        else:
            csv_path, json_path = out, report_path
        io.write_completed_csv(csv_path, report.completed, clusters, ids)
        io.write_json(json_path, io.imputation_payload(report, nan_total))
        if args.verbose:
            print(audit.to_json(), file=sys.stderr)
        print(f"wrote {csv_path} and {json_path} ({report.filled_cells} cells filled)")
    return 0


def _experiment_outputs(args, name: str, payload: dict, petals: tuple[str, ...]) -> None:
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    io.write_json(outdir / f"{name}_report.json", payload)
    io.atomic_write_text(outdir / f"{name}_report.csv", io.render_report_csv(payload, petals))
    print(f"wrote {outdir / (name + '_report.json')} and {outdir / (name + '_report.csv')}")


def _scenario(args: argparse.Namespace):
    if not args.scenario:
        raise UsageError("a scenario config file is required (--scenario)")
    mapping = io.parse_kv_config(args.scenario)
    params, extras = io.scenario_from_mapping(mapping)
    if args.seed is not None:
        params = replace(params, seed=args.seed)
    return params, extras


def _experiment_knobs(args, extras, run: RunConfig) -> tuple[int, float]:
    # flags > run config file > scenario extras > defaults
    replicates = run.bootstrap.replicates
    if args.replicates is None and "replicates" in extras:
        replicates = int(extras["replicates"])
    ci_level = run.bootstrap.ci_level
    if args.ci_level is None and "ci_level" in extras:
        ci_level = float(extras["ci_level"])
    return replicates, ci_level


def cmd_simulate(args: argparse.Namespace) -> int:
    params, extras = _scenario(args)
    run = build_run_config(args)
    n_sims = args.n_sims if args.n_sims is not None else int(extras.get("n_sims", "200"))
    petals = tuple(f"q{j}" for j in range(params.n_petals))
    outdir = Path(args.output_dir)

    if args.panel_out:
        tensor, truth = generate(params)
        ids = io.IdTables.default(params.n_personas, params.n_petals, params.clusters.n_clusters)
        io.write_votes_csv(args.panel_out, tensor, params.clusters, ids)
        truth_payload = {
            "mu": {qid: float(params.mu[j]) for j, qid in enumerate(petals)},
            "v_true": {f"p{p}": float(v) for p, v in enumerate(truth.v_true)},
            "repaired_cells": [list(c) for c in truth.repaired_cells],
            "seed": params.seed,
        }
        io.write_json(Path(args.panel_out).with_suffix(".truth.json"), truth_payload)
        print(f"wrote {args.panel_out}")

    if args.experiment == "none":
        return 0
    if args.experiment == "mse":
        report = run_mse_experiment(params, n_sims, run.pooling)
        _gate_nan(scan_nan(report.mse_owb_ideal) + scan_nan(report.mse_owb_feasible)
                  + scan_nan(report.mse_uniform), "experiment report")
        payload = io.monte_carlo_payload(report, petals)
        _experiment_outputs(args, "mse", payload, petals)
        if not args.no_figures:
            fig = figures.render_mse_figure(report, petals, outdir / "mse_report.png")
            print(f"wrote {fig}")
    elif args.experiment == "coverage":
        replicates, ci_level = _experiment_knobs(args, extras, run)
        report = run_coverage_experiment(params, n_sims, ci_level, replicates, run.pooling)
        _gate_nan(scan_nan(report.empirical_coverage), "experiment report")
        payload = io.monte_carlo_payload(report, petals)
        _experiment_outputs(args, "coverage", payload, petals)
        if not args.no_figures:
            fig = figures.render_coverage_figure(report, petals, outdir / "coverage_report.png")
            print(f"wrote {fig}")
    elif args.experiment == "shrinkage":
        report = run_shrinkage_experiment(params, n_sims, run.pooling,
                                          lambda_override=args.lambda_override)
        _gate_nan(scan_nan(np.array([report.mse_pooled, report.mse_raw, report.ratio])),
                  "experiment report")
        payload = io.shrinkage_payload(report)
        _experiment_outputs(args, "shrinkage", payload, petals)
        if not args.no_figures:
            fig = figures.render_shrinkage_figure(report, outdir / "shrinkage_report.png")
            print(f"wrote {fig}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    params, extras = _scenario(args)
    run = build_run_config(args)
    n_sims = args.n_sims if args.n_sims is not None else int(extras.get("n_sims", "50"))
    if args.replicates is None and "replicates" not in extras:
        extras = dict(extras, replicates="200")  # desk-scale bench default
    replicates, ci_level = _experiment_knobs(args, extras, run)
    petals = tuple(f"q{j}" for j in range(params.n_petals))
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    mse = run_mse_experiment(params, n_sims, run.pooling)
    coverage = run_coverage_experiment(params, n_sims, ci_level, replicates, run.pooling)
    shrink = run_shrinkage_experiment(params, n_sims, run.pooling)
    _gate_nan(
        scan_nan(mse.mse_owb_ideal) + scan_nan(mse.mse_owb_feasible)
        + scan_nan(mse.mse_uniform) + scan_nan(coverage.empirical_coverage)
        + scan_nan(np.array([shrink.mse_pooled, shrink.mse_raw, shrink.ratio])),
        "bench report",
    )
    combined = {
        "mse": io.monte_carlo_payload(mse, petals),
        "coverage": io.monte_carlo_payload(coverage, petals),
        "shrinkage": io.shrinkage_payload(shrink),
    }
    io.write_json(outdir / "bench_report.json", combined)
    csv_text = "section,metric,petal,value\n"
    for section, payload in combined.items():
        for metric, qid, value in io.report_csv_rows(payload, petals):
            csv_text += f"{section},{metric},{qid},{value}\n"
    io.atomic_write_text(outdir / "bench_report.csv", csv_text)
    print(f"wrote {outdir / 'bench_report.json'} and {outdir / 'bench_report.csv'}")
    if not args.no_figures:
        print(f"wrote {figures.render_mse_figure(mse, petals, outdir / 'bench_mse.png')}")
        print(f"wrote {figures.render_coverage_figure(coverage, petals, outdir / 'bench_coverage.png')}")
        print(f"wrote {figures.render_shrinkage_figure(shrink, outdir / 'bench_shrinkage.png')}")
    return 0


class _Parser(argparse.ArgumentParser):
    # Usage problems exit 1 per the package-wide exit-code convention.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--replicates", type=int, default=None, help="bootstrap replicates (default 2000)")
    p.add_argument("--ci-level", type=float, default=None, help="CI level (default 0.90)")
    p.add_argument("--prior-strength-persona", type=float, default=None,
                   help="persona-level pooling prior strength (default 5)")
    p.add_argument("--prior-strength-cluster", type=float, default=None,
                   help="cluster-level pooling prior strength (default 5)")
    p.add_argument("--variance-floor", type=float, default=None,
                   help="lower bound for effective variances (default 1e-12)")
    p.add_argument("--no-validate", action="store_true",
                   help="skip the upfront per-petal minimal-data check")
    p.add_argument("--verbose", action="store_true", help="dump the audit log as JSON to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="owb", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check per-petal minimal data")
    p.add_argument("votes", help="votes CSV")
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("estimate", help="feasible variance-weighted archetype estimate")
    p.add_argument("votes", help="votes CSV")
    p.add_argument("-o", "--output", default="archetype.json", help="output JSON path")
    _add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bootstrap-ci", help="estimate plus weighted-bootstrap CIs")
    p.add_argument("votes", help="votes CSV")
    p.add_argument("-o", "--output", default="archetype.json", help="output JSON path")
    _add_common(p)
    p.set_defaults(func=cmd_bootstrap_ci)

    p = sub.add_parser("impute", help="fill missing cells via the donor fallback chain")
    p.add_argument("votes", help="votes CSV")
    p.add_argument("-o", "--output", default="completed.csv", help="completed CSV path")
    p.add_argument("--report", default=None, help="report JSON path (default <output>.report.json)")
    p.add_argument("--multiple", type=int, default=1,
                   help="emit M completed datasets from consecutive seeds")
    _add_common(p)
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("simulate", help="run a Monte Carlo experiment from a scenario config")
    p.add_argument("--scenario", required=True, help="scenario config file")
    p.add_argument("--experiment", choices=["mse", "coverage", "shrinkage", "none"],
                   default="mse")
    p.add_argument("--n-sims", type=int, default=None, help="number of simulated panels")
    p.add_argument("--lambda-override", type=float, default=None,
                   help="pin the persona-level pooling weight (shrinkage experiment)")
    p.add_argument("--panel-out", default=None, help="also write one generated panel as votes CSV")
    p.add_argument("-o", "--output-dir", default=".", help="directory for report files")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="run the full experiment battery at desk scale")
    p.add_argument("--scenario", required=True, help="scenario config file")
    p.add_argument("--n-sims", type=int, default=None, help="panels per experiment")
    p.add_argument("-o", "--output-dir", default=".", help="directory for report files")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except OwbError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
