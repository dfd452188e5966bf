"""NaN-free completion of a vote tensor via a hierarchical donor fallback.

Every missing cell is filled with one draw from the first nonempty donor
pool in the chain

    local -> persona -> cluster -> petal_global -> global_all -> error,

where each pool is a multiset of values actually observed in the input
tensor together with an explicit probability vector. As long as every
petal has at least one finite observation somewhere, some layer is
guaranteed nonempty for every cell, so the completed tensor contains no
NaN. An input violating that minimal-data requirement raises an explicit
error instead of silently inventing data.

Filling is single-pass over the original mask: imputed values never enter
later donor pools, so the result is independent of fill order, and each
cell draws from its own derived stream, so the result is bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import seeds
from .diagnostics import AuditLog, weighted_value
from .errors import EmptyPetal, InvariantError, NoDataAnywhere
from .model import ClusterMap, VoteTensor
from .weights import WeightVector

LAYERS = ("local", "persona", "cluster", "petal_global", "global_all")


@dataclass(frozen=True)
class DonorPool:
    """Observed values a missing cell may copy, with explicit probabilities."""

    values: np.ndarray
    probs: np.ndarray
    layer: str

    def __post_init__(self):
        if self.layer not in LAYERS:
            raise InvariantError(f"unknown donor layer {self.layer!r}")
        if self.values.size == 0:
            raise InvariantError("donor pool must be nonempty")
        if not np.all(np.isfinite(self.values)):
            raise InvariantError("donor pool contains non-finite values")
        if self.values.shape != self.probs.shape:
            raise InvariantError("donor values/probs length mismatch")
        if not np.all(np.isfinite(self.probs)) or np.any(self.probs <= 0.0):
            raise InvariantError("donor probabilities must be finite and positive")
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise InvariantError("donor probabilities must sum to 1")
        self.values.setflags(write=False)
        self.probs.setflags(write=False)


@dataclass(frozen=True)
class ImputationReport:
    """Completed tensor plus an account of where each fill came from."""

    completed: VoteTensor
    filled_cells: int
    layer_histogram: dict[str, int]
    seed: int
    cell_trace: tuple[tuple[int, int, int, str], ...] | None = None


def _pool(values: list[float], raw_probs: list[float], layer: str) -> DonorPool:
    vals = np.asarray(values, dtype=np.float64)
    p = np.asarray(raw_probs, dtype=np.float64)
    return DonorPool(values=vals, probs=p / p.sum(), layer=layer)


def build_donor_pool(
    tensor: VoteTensor,
    clusters: ClusterMap,
    weights: WeightVector,
    cell: tuple[int, int, int],
) -> DonorPool:
    """First nonempty donor pool in the fallback chain for one missing cell.

    Layer probabilities: local donors (same round, same petal, other
    personas) are weighted by the persona weights; persona-history donors
    equally; cluster/petal/global donors get each persona's weight split
    equally over that persona's donor rounds, so a persona's total donation
    probability stays proportional to its weight however many rounds it
    contributes.
    """
    p, r, j = cell
    n = tensor.n_personas
    if not (0 <= p < n and 0 <= j < tensor.n_petals and 0 <= r < tensor.values[p].shape[0]):
        raise InvariantError(f"cell {cell!r} out of range")
    if tensor.mask[p][r, j]:
        raise InvariantError(f"cell {cell!r} is observed, nothing to impute")
    w = weights.w

    # local: same round index, same petal, other personas (only personas
    # that have a round r at all are comparable).
    vals: list[float] = []
    probs: list[float] = []
    for q in range(n):
        if q != p and r < tensor.values[q].shape[0] and tensor.mask[q][r, j]:
            vals.append(float(tensor.values[q][r, j]))
            probs.append(float(w[q]))
    if vals:
        return _pool(vals, probs, "local")

    # persona: own history on the same petal.
    own_mask = tensor.mask[p][:, j].copy()
    own_mask[r] = False
    own_rounds = np.nonzero(own_mask)[0]
    if own_rounds.size:
        vals = [float(tensor.values[p][rr, j]) for rr in own_rounds]
        return _pool(vals, [1.0] * len(vals), "persona")

    def _per_persona_pool(members, petals) -> tuple[list[float], list[float]]:
        pool_vals: list[float] = []
        pool_probs: list[float] = []
        for q in members:
            donated: list[float] = []
            for jj in petals:
                rounds = np.nonzero(tensor.mask[q][:, jj])[0]
                donated.extend(float(tensor.values[q][rr, jj]) for rr in rounds)
            if donated:
                share = float(w[q]) / len(donated)
                pool_vals.extend(donated)
                pool_probs.extend([share] * len(donated))
        return pool_vals, pool_probs

    # cluster: any round from any persona in p's cluster, same petal.
    vals, probs = _per_persona_pool(clusters.members(int(clusters.assignment[p])), [j])
    if vals:
        return _pool(vals, probs, "cluster")

    # petal_global: any round from any persona, same petal.
    vals, probs = _per_persona_pool(range(n), [j])
    if vals:
        return _pool(vals, probs, "petal_global")

    # global_all: every finite value anywhere.
    vals, probs = _per_persona_pool(range(n), range(tensor.n_petals))
    if vals:
        return _pool(vals, probs, "global_all")

    raise NoDataAnywhere()


def impute(
    tensor: VoteTensor,
    clusters: ClusterMap,
    weights: WeightVector,
    seed: int,
    audit: AuditLog | None = None,
    trace: bool = False,
) -> ImputationReport:
    """Fill every missing cell from its donor pool; observed cells untouched.

    Validates the minimal-data requirement first: an entirely empty tensor
    raises :class:`NoDataAnywhere`; otherwise any petal with zero finite
    observations raises :class:`EmptyPetal` before any filling happens.
    Each cell draws from a stream derived from (seed, p, r, j), so reruns
    are bit-identical and cells may be filled in any order.
    """
    if clusters.n_personas != tensor.n_personas or weights.n != tensor.n_personas:
        raise InvariantError("tensor, cluster map, and weights disagree on N")
    if tensor.total_observed() == 0:
        raise NoDataAnywhere()
    empty_petals = np.nonzero(tensor.petal_observation_counts() == 0)[0]
    if empty_petals.size:
        raise EmptyPetal(int(empty_petals[0]))

    new_values = [v.copy() for v in tensor.values]
    histogram = {layer: 0 for layer in LAYERS}
    cell_trace: list[tuple[int, int, int, str]] = []
    filled = 0
    for p in range(tensor.n_personas):
        missing = np.nonzero(~tensor.mask[p])
        for r, j in zip(*missing):
            pool = build_donor_pool(tensor, clusters, weights, (p, int(r), int(j)))
            rng = seeds.derive_rng(seed, seeds.NS_IMPUTE, p, int(r), int(j))
            new_values[p][r, j] = weighted_value(rng, pool.values, pool.probs, audit=audit)
            histogram[pool.layer] += 1
            filled += 1
            if trace:
                cell_trace.append((p, int(r), int(j), pool.layer))

    completed = VoteTensor(
        values=tuple(_readonly(v) for v in new_values),
        mask=tuple(_readonly(np.ones_like(m, dtype=bool)) for m in tensor.mask),
    )
    return ImputationReport(
        completed=completed,
        filled_cells=filled,
        layer_histogram=histogram,
        seed=seed,
        cell_trace=tuple(cell_trace) if trace else None,
    )


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr
