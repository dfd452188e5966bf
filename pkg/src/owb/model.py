"""Vote panel data model: ragged vote tensor, cluster map, persona summaries.

A panel holds N personas voting on P petals over repeated rounds; persona p
has its own round count n_p. Missingness is carried as an explicit boolean
mask (True = observed finite value), never as NaN payloads. All types are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvariantError


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class VoteTensor:
    """Ragged persona x round x petal votes with an explicit missingness mask.

    ``values[p]`` is an (n_p, P) float array, ``mask[p]`` the matching
    boolean array; ``mask[p][r, j]`` is True iff the vote is an observed
    finite real. Masked-out payload cells are stored as 0.0 and must never
    enter arithmetic.
    """

    values: tuple[np.ndarray, ...]
    mask: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.values) == 0:
            raise InvariantError("tensor needs at least one persona")
        if len(self.values) != len(self.mask):
            raise InvariantError("values/mask persona counts differ")
        p_count = self.values[0].shape[1] if self.values[0].ndim == 2 else 0
        if p_count < 1:
            raise InvariantError("tensor needs at least one petal")
        for p, (vals, msk) in enumerate(zip(self.values, self.mask)):
            if vals.shape != msk.shape or vals.ndim != 2:
                raise InvariantError(f"persona {p}: values/mask shape mismatch")
            if vals.shape[0] < 1:
                raise InvariantError(f"persona {p}: needs at least one round")
            if vals.shape[1] != p_count:
                raise InvariantError(f"persona {p}: expected {p_count} petals")
            if not np.all(np.isfinite(vals[msk])):
                raise InvariantError(f"persona {p}: non-finite value under mask")

    @property
    def n_personas(self) -> int:
        return len(self.values)

    @property
    def n_petals(self) -> int:
        return self.values[0].shape[1]

    @property
    def rounds_per_persona(self) -> list[int]:
        return [v.shape[0] for v in self.values]

    @classmethod
    def from_arrays(cls, raw_values, raw_mask=None) -> "VoteTensor":
        """Build a tensor from per-persona arrays.

        NaN/infinite entries (and entries where ``raw_mask`` is False) become
        masked-out cells with a 0.0 payload, so sentinel values can never
        leak into arithmetic.
        """
        values = []
        mask = []
        for p, raw in enumerate(raw_values):
            arr = np.array(raw, dtype=np.float64)
            if arr.ndim != 2:
                raise InvariantError(f"persona {p}: expected a rounds x petals array")
            finite = np.isfinite(arr)
            if raw_mask is not None:
                finite &= np.asarray(raw_mask[p], dtype=bool)
            values.append(_freeze(np.where(finite, arr, 0.0)))
            mask.append(_freeze(finite))
        return cls(values=tuple(values), mask=tuple(mask))

    def petal_observation_counts(self) -> np.ndarray:
        """Finite observations per petal across all personas and rounds."""
        counts = np.zeros(self.n_petals, dtype=np.int64)
        for msk in self.mask:
            counts += msk.sum(axis=0)
        return counts

    def total_observed(self) -> int:
        return int(sum(int(m.sum()) for m in self.mask))


@dataclass(frozen=True)
class ClusterMap:
    """Total assignment of personas to contiguous cluster ids 0..C-1."""

    assignment: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.assignment, dtype=np.int64)
        if arr.ndim != 1 or arr.size < 1:
            raise InvariantError("cluster assignment must be a nonempty vector")
        if arr.min() < 0:
            raise InvariantError("cluster ids must be nonnegative")
        c = int(arr.max()) + 1
        present = np.unique(arr)
        if present.size != c:
            raise InvariantError("cluster ids must be contiguous 0..C-1")
        object.__setattr__(self, "assignment", _freeze(arr))

    @property
    def n_personas(self) -> int:
        return int(self.assignment.size)

    @property
    def n_clusters(self) -> int:
        return int(self.assignment.max()) + 1

    def members(self, cluster: int) -> np.ndarray:
        return np.nonzero(self.assignment == cluster)[0]

    @classmethod
    def single_cluster(cls, n_personas: int) -> "ClusterMap":
        return cls(np.zeros(n_personas, dtype=np.int64))

    @classmethod
    def contiguous_blocks(cls, n_personas: int, n_clusters: int) -> "ClusterMap":
        """Split personas into n_clusters roughly equal contiguous blocks."""
        if not 1 <= n_clusters <= n_personas:
            raise InvariantError("need 1 <= n_clusters <= n_personas")
        return cls((np.arange(n_personas) * n_clusters) // n_personas)


@dataclass(frozen=True)
class PersonaSummary:
    """Per-persona petal means, observation counts, and variance proxies.

    ``means[p, j]`` is defined iff ``counts[p, j] >= 1`` (payload 0.0
    otherwise); ``raw_trace_var[p]`` is defined iff ``trace_defined[p]``,
    equivalently ``df[p] >= 1``.
    """

    means: np.ndarray
    counts: np.ndarray
    raw_trace_var: np.ndarray
    trace_defined: np.ndarray
    df: np.ndarray

    def __post_init__(self):
        for name in ("means", "counts", "raw_trace_var", "trace_defined", "df"):
            _freeze(getattr(self, name))

    @property
    def n_personas(self) -> int:
        return self.means.shape[0]

    @property
    def n_petals(self) -> int:
        return self.means.shape[1]

    def contributors(self, petal: int) -> np.ndarray:
        """Indices of personas with at least one observation on a petal."""
        return np.nonzero(self.counts[:, petal] >= 1)[0]


def summarize(tensor: VoteTensor) -> PersonaSummary:
    """Reduce a vote tensor to per-persona means and variance proxies.

    For each persona p and petal j, the mean is taken over observed rounds
    only. The reliability proxy ``raw_trace_var[p]`` is the average of
    s2_{p,j} / n_{p,j} over petals with at least two observations, where
    s2 is the unbiased sample variance across observed rounds: the mean
    diagonal of the estimated covariance of the persona's petal-mean
    vector, restricted to estimable petals. Personas with no estimable
    petal are marked undefined rather than given a NaN.

    Summation happens in a canonical (sorted) order per persona-petal, so
    the output is exactly invariant under permutation of rounds.
    """
    n_petals = tensor.n_petals
    n = tensor.n_personas
    means = np.zeros((n, n_petals), dtype=np.float64)
    counts = np.zeros((n, n_petals), dtype=np.int64)
    trace = np.zeros(n, dtype=np.float64)
    trace_defined = np.zeros(n, dtype=bool)
    df = np.zeros(n, dtype=np.int64)

    for p in range(n):
        vals = tensor.values[p]
        msk = tensor.mask[p]
        # Canonical order: observed values ascending, +inf padding sorts last.
        srt = np.sort(np.where(msk, vals, np.inf), axis=0)
        obs = np.isfinite(srt)
        cnt = obs.sum(axis=0)
        sums = np.where(obs, srt, 0.0).sum(axis=0)
        mean_p = np.where(cnt >= 1, sums / np.maximum(cnt, 1), 0.0)
        dev = np.where(obs, srt - mean_p, 0.0)
        ss = (dev * dev).sum(axis=0)
        estimable = cnt >= 2
        if np.any(estimable):
            s2 = ss[estimable] / (cnt[estimable] - 1)
            per_petal = s2 / cnt[estimable]
            trace[p] = float(per_petal.sum() / per_petal.size)
            trace_defined[p] = True
        means[p] = mean_p
        counts[p] = cnt
        df[p] = int(np.maximum(cnt - 1, 0).sum())

    return PersonaSummary(
        means=means,
        counts=counts,
        raw_trace_var=trace,
        trace_defined=trace_defined,
        df=df,
    )
