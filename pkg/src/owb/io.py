"""File formats: long-format votes CSV, flat key-value configs, JSON reports.

The votes file is long format with a mandatory header::

    persona_id,cluster_id,round,petal_id,value

One record per cell; an empty (or NaN) value field marks a missing cell.
Persona, petal, and cluster orderings are fixed by first appearance, and
every float is serialized with full round-trip precision, so
ingest(write(tensor)) reproduces the tensor bit for bit. All writes are
atomic (write to a temp file, then rename).
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bootstrap import BootstrapConfig, BootstrapResult
from .errors import DuplicateKey, InconsistentCluster, InvariantError, ParseError, UsageError
from .imputer import ImputationReport
from .model import ClusterMap, VoteTensor
from .pipeline import FeasibleFit
from .simulator import MonteCarloReport, ShrinkageReport, SimulationParams

VOTES_HEADER = ["persona_id", "cluster_id", "round", "petal_id", "value"]


@dataclass(frozen=True)
class IdTables:
    """String ids in first-appearance order plus their index maps."""

    personas: tuple[str, ...]
    petals: tuple[str, ...]
    clusters: tuple[str, ...]

    def persona_index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.personas)}

    def petal_index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.petals)}

    @classmethod
    def default(cls, n_personas: int, n_petals: int, n_clusters: int) -> "IdTables":
        return cls(
            personas=tuple(f"p{i}" for i in range(n_personas)),
            petals=tuple(f"q{j}" for j in range(n_petals)),
            clusters=tuple(f"c{k}" for k in range(n_clusters)),
        )


def ingest(path: str | Path) -> tuple[VoteTensor, ClusterMap, IdTables]:
    """Read a votes CSV into a dense-indexed tensor with mask and id tables."""
    path = Path(path)
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc

    personas: list[str] = []
    petals: list[str] = []
    clusters: list[str] = []
    persona_cluster: dict[str, str] = {}
    records: dict[tuple[str, int, str], float | None] = {}
    record_line: dict[tuple[str, int, str], int] = {}
    max_round: dict[str, int] = {}

    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, "empty file, expected a header row") from None
        if [h.strip() for h in header] != VOTES_HEADER:
            raise ParseError(1, f"expected header {','.join(VOTES_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 5:
                raise ParseError(lineno, f"expected 5 fields, got {len(row)}")
            pid, cid, round_s, qid, value_s = (f.strip() for f in row)
            if not pid or not cid or not qid:
                raise ParseError(lineno, "persona_id, cluster_id, petal_id must be nonempty")
            try:
                rnd = int(round_s)
            except ValueError:
                raise ParseError(lineno, f"round {round_s!r} is not an integer") from None
            if rnd < 0:
                raise ParseError(lineno, f"round {rnd} is negative")
            if value_s == "":
                value: float | None = None
            else:
                try:
                    value = float(value_s)
                except ValueError:
                    raise ParseError(lineno, f"value {value_s!r} is not a number") from None
                if not math.isfinite(value):
                    value = None
            if pid in persona_cluster:
                if persona_cluster[pid] != cid:
                    raise InconsistentCluster(pid, persona_cluster[pid], cid)
            else:
                persona_cluster[pid] = cid
                personas.append(pid)
                if cid not in clusters:
                    clusters.append(cid)
            if qid not in petals:
                petals.append(qid)
            key = (pid, rnd, qid)
            if key in records:
                raise DuplicateKey(lineno, key)
            records[key] = value
            record_line[key] = lineno
            max_round[pid] = max(max_round.get(pid, 0), rnd)

    if not personas:
        raise ParseError(2, "no records found")

    ids = IdTables(personas=tuple(personas), petals=tuple(petals), clusters=tuple(clusters))
    p_idx = ids.persona_index()
    q_idx = ids.petal_index()
    c_idx = {s: i for i, s in enumerate(clusters)}

    values = []
    mask = []
    for pid in personas:
        n_rounds = max_round[pid] + 1
        vals = np.zeros((n_rounds, len(petals)), dtype=np.float64)
        msk = np.zeros((n_rounds, len(petals)), dtype=bool)
        values.append(vals)
        mask.append(msk)
    for (pid, rnd, qid), value in records.items():
        if value is not None:
            values[p_idx[pid]][rnd, q_idx[qid]] = value
            mask[p_idx[pid]][rnd, q_idx[qid]] = True

    tensor = VoteTensor.from_arrays(values, mask)
    cluster_map = ClusterMap(np.array([c_idx[persona_cluster[pid]] for pid in personas]))
    return tensor, cluster_map, ids


def _fmt(x: float) -> str:
    # repr of a Python float is the shortest string that round-trips exactly.
    return repr(float(x))


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)  # mkstemp creates 0600; honor the umask instead
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_votes_csv(tensor: VoteTensor, clusters: ClusterMap, ids: IdTables) -> str:
    """Serialize every cell, observed or not; missing cells get empty values."""
    lines = [",".join(VOTES_HEADER)]
    for p, pid in enumerate(ids.personas):
        cid = ids.clusters[int(clusters.assignment[p])]
        vals = tensor.values[p]
        msk = tensor.mask[p]
        for r in range(vals.shape[0]):
            for j, qid in enumerate(ids.petals):
                cell = _fmt(vals[r, j]) if msk[r, j] else ""
                lines.append(f"{pid},{cid},{r},{qid},{cell}")
    return "\n".join(lines) + "\n"


def write_votes_csv(path: str | Path, tensor: VoteTensor, clusters: ClusterMap, ids: IdTables) -> None:
    atomic_write_text(path, render_votes_csv(tensor, clusters, ids))


def write_completed_csv(path: str | Path, tensor: VoteTensor, clusters: ClusterMap, ids: IdTables) -> None:
    if not all(m.all() for m in tensor.mask):
        raise InvariantError("completed tensor still has masked cells")
    atomic_write_text(path, render_votes_csv(tensor, clusters, ids))


# --- flat key-value configuration files ---------------------------------


def parse_kv_config(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment, blanks ignored."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def scenario_from_mapping(cfg: dict[str, str]) -> tuple[SimulationParams, dict[str, str]]:
    """Build simulation parameters from a flat scenario mapping.

    Recognized keys: n_personas, n_petals, n_clusters, rounds (scalar or
    comma list), mu (scalar broadcast or comma list), sigma_alpha2,
    sigma_gamma2, sigma2, missing_rate, petal_scale (comma list), seed.
    Unrecognized keys are returned untouched for the caller (experiment
    runners use n_sims, replicates, ci_level).
    """
    known = {
        "n_personas", "n_petals", "n_clusters", "rounds", "mu",
        "sigma_alpha2", "sigma_gamma2", "sigma2", "missing_rate",
        "petal_scale", "seed",
    }
    try:
        n_personas = int(cfg.get("n_personas", "20"))
        n_petals = int(cfg.get("n_petals", "4"))
        n_clusters = int(cfg.get("n_clusters", "1"))
        rounds_raw = cfg.get("rounds", "5")
        if "," in rounds_raw:
            rounds = tuple(int(tok) for tok in rounds_raw.split(",") if tok.strip())
            if len(rounds) != n_personas:
                raise UsageError("rounds list length must equal n_personas")
        else:
            rounds = tuple([int(rounds_raw)] * n_personas)
        mu_raw = cfg.get("mu", "0.0")
        mu_list = _parse_float_list(mu_raw)
        if len(mu_list) == 1:
            mu = np.full(n_petals, mu_list[0])
        elif len(mu_list) == n_petals:
            mu = np.array(mu_list)
        else:
            raise UsageError("mu must be a scalar or one value per petal")
        petal_scale = None
        if "petal_scale" in cfg:
            scale = _parse_float_list(cfg["petal_scale"])
            if len(scale) != n_petals:
                raise UsageError("petal_scale needs one value per petal")
            petal_scale = np.array(scale)
        params = SimulationParams(
            mu=mu,
            sigma_alpha2=float(cfg.get("sigma_alpha2", "0.5")),
            sigma_gamma2=float(cfg.get("sigma_gamma2", "0.25")),
            sigma2=float(cfg.get("sigma2", "1.0")),
            n_per_persona=rounds,
            clusters=ClusterMap.contiguous_blocks(n_personas, n_clusters),
            missing_rate=float(cfg.get("missing_rate", "0.0")),
            petal_scale=petal_scale,
            seed=int(cfg.get("seed", "0")),
        )
    except InvariantError as exc:
        raise UsageError(f"bad scenario: {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"bad scenario value: {exc}") from exc
    extras = {k: v for k, v in cfg.items() if k not in known}
    return params, extras


# --- JSON / CSV report rendering -----------------------------------------


def archetype_payload(
    fit: FeasibleFit,
    ids: IdTables,
    boot: BootstrapResult | None = None,
    boot_cfg: BootstrapConfig | None = None,
    nan_scan_count: int | None = None,
) -> dict:
    est = fit.estimate
    payload: dict = {
        "method": est.method,
        "petals": list(ids.petals),
        "personas": list(ids.personas),
        "mu_hat": {qid: float(est.mu_hat[j]) for j, qid in enumerate(ids.petals)},
        "weights": {pid: float(fit.weights.w[p]) for p, pid in enumerate(ids.personas)},
        "lambda_persona": {
            pid: float(fit.pooled.lambda_persona[p]) for p, pid in enumerate(ids.personas)
        },
        "v_eff": {pid: float(fit.pooled.v_eff[p]) for p, pid in enumerate(ids.personas)},
        "diagnostics": {
            "min_weight_ratio": fit.weights.min_weight_ratio,
            "weight_regularity_threshold": fit.regularity.threshold,
            "weight_regularity_pass": fit.regularity.passed,
            "degenerate_variance": fit.pooled.degenerate,
            "v_global": fit.pooled.v_global,
            "nan_scan": nan_scan_count,
        },
    }
    if boot is not None and boot_cfg is not None:
        payload["ci_level"] = boot_cfg.ci_level
        payload["replicates"] = boot_cfg.replicates
        payload["seed"] = boot_cfg.seed
        payload["ci"] = {qid: [boot.ci[j][0], boot.ci[j][1]] for j, qid in enumerate(ids.petals)}
        payload["se"] = {qid: float(boot.se[j]) for j, qid in enumerate(ids.petals)}
        payload["ci_fallback_count"] = {
            qid: int(boot.fallback_count[j]) for j, qid in enumerate(ids.petals)
        }
    return payload


def imputation_payload(report: ImputationReport, nan_scan_count: int) -> dict:
    payload = {
        "filled_cells": report.filled_cells,
        "layer_histogram": dict(report.layer_histogram),
        "seed": report.seed,
        "nan_scan": nan_scan_count,
    }
    if report.cell_trace is not None:
        payload["cell_trace"] = [
            {"persona": p, "round": r, "petal": j, "layer": layer}
            for (p, r, j, layer) in report.cell_trace
        ]
    return payload


def monte_carlo_payload(report: MonteCarloReport, petals: tuple[str, ...]) -> dict:
    def per_petal(arr):
        return None if arr is None else {qid: float(arr[j]) for j, qid in enumerate(petals)}

    return {
        "n_sims": report.n_sims,
        "mse_owb_ideal": per_petal(report.mse_owb_ideal),
        "mse_owb_feasible": per_petal(report.mse_owb_feasible),
        "mse_uniform": per_petal(report.mse_uniform),
        "mse_owb_ideal_aggregate": report.aggregate(report.mse_owb_ideal),
        "mse_owb_feasible_aggregate": report.aggregate(report.mse_owb_feasible),
        "mse_uniform_aggregate": report.aggregate(report.mse_uniform),
        "analytic_owb_variance": report.analytic_owb_variance,
        "analytic_uniform_variance": report.analytic_uniform_variance,
        "analytic_variance_ratio": report.analytic_variance_ratio,
        "empirical_coverage": per_petal(report.empirical_coverage),
        "coverage_aggregate": report.aggregate(report.empirical_coverage),
        "ci_level": report.ci_level,
        "not_applicable": report.not_applicable,
    }


def shrinkage_payload(report: ShrinkageReport) -> dict:
    return {
        "mse_pooled": report.mse_pooled,
        "mse_raw": report.mse_raw,
        "ratio": report.ratio,
        "n_sims": report.n_sims,
    }


def report_csv_rows(payload: dict, petals: tuple[str, ...]) -> list[tuple[str, str, str]]:
    """Flatten a report payload into (metric, petal, value) rows."""
    rows: list[tuple[str, str, str]] = []
    for metric, value in payload.items():
        if value is None:
            continue
        if isinstance(value, dict):
            for qid in petals:
                if qid in value and value[qid] is not None:
                    rows.append((metric, qid, _fmt(value[qid])))
        elif isinstance(value, bool):
            rows.append((metric, "", str(value).lower()))
        elif isinstance(value, (int, float)):
            rows.append((metric, "", _fmt(value) if isinstance(value, float) else str(value)))
    return rows


def render_report_csv(payload: dict, petals: tuple[str, ...]) -> str:
    lines = ["metric,petal,value"]
    lines += [f"{m},{q},{v}" for m, q, v in report_csv_rows(payload, petals)]
    return "\n".join(lines) + "\n"


def write_json(path: str | Path, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")
