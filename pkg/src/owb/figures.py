"""Figure rendering for experiment reports (file output only, Agg backend)."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .simulator import MonteCarloReport, ShrinkageReport

_SAVE_OPTS = {"dpi": 120, "bbox_inches": "tight", "metadata": {"Software": None}}


def _save_atomic(fig, path: Path) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            fig.savefig(handle, format="png", **_SAVE_OPTS)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)


def render_mse_figure(report: MonteCarloReport, petals, path: str | Path) -> Path:
    """Grouped per-petal MSE bars for the three estimators, log scale."""
    path = Path(path)
    labels = list(petals)
    x = np.arange(len(labels))
    width = 0.27
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(labels) + 2.0), 3.4))
    series = [
        ("ideal", report.mse_owb_ideal, "#2166ac"),
        ("feasible", report.mse_owb_feasible, "#67a9cf"),
        ("uniform", report.mse_uniform, "#b2182b"),
    ]
    for k, (name, values, color) in enumerate(series):
        if values is not None:
            ax.bar(x + (k - 1) * width, values, width, label=name, color=color)
    ax.set_xticks(x)
    ax.set_xticklabels(labels)
    ax.set_yscale("log")
    ax.set_xlabel("petal")
    ax.set_ylabel("MSE")
    title = f"estimator MSE over {report.n_sims} panels"
    if report.analytic_variance_ratio is not None:
        title += f" (analytic ideal/uniform ratio {report.analytic_variance_ratio:.3g})"
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    _save_atomic(fig, path)
    return path


def render_coverage_figure(report: MonteCarloReport, petals, path: str | Path) -> Path:
    """Per-petal empirical CI coverage against the nominal level."""
    path = Path(path)
    labels = list(petals)
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(labels) + 2.0), 3.4))
    ax.bar(x, report.empirical_coverage, 0.5, color="#4393c3", label="empirical")
    if report.ci_level is not None:
        ax.axhline(report.ci_level, color="#b2182b", linestyle="--", label="nominal")
    ax.set_xticks(x)
    ax.set_xticklabels(labels)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("petal")
    ax.set_ylabel("coverage")
    ax.set_title(f"bootstrap CI coverage over {report.n_sims} panels", fontsize=10)
    ax.legend(fontsize=8)
    _save_atomic(fig, path)
    return path


def render_shrinkage_figure(report: ShrinkageReport, path: str | Path) -> Path:
    """Pooled vs raw variance-proxy risk."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(4.0, 3.4))
    ax.bar([0, 1], [report.mse_raw, report.mse_pooled], 0.5, color=["#b2182b", "#2166ac"])
    ax.set_xticks([0, 1])
    ax.set_xticklabels(["raw", "pooled"])
    ax.set_ylabel("MSE vs true variance")
    ax.set_title(
        f"variance pooling risk, ratio {report.ratio:.3f} ({report.n_sims} panels)",
        fontsize=10,
    )
    _save_atomic(fig, path)
    return path
