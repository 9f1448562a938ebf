"""Optimal grouping of a border chain into K consecutive bands."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import BandsegError, InstanceTooLargeError, ScoreModel, SegmentStats, Staircase, segment_scores

TIE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Segmentation:
    """K bands over a chain of L segments.

    Band ``k`` merges chain segments ``boundaries[k] .. boundaries[k+1] - 1``.
    When more bands are requested than there are chain segments, the leading
    bands are empty and ``effective_K`` counts the non-empty ones.
    """

    K: int
    boundaries: np.ndarray
    counts: np.ndarray
    sums: np.ndarray
    sumsqs: np.ndarray
    band_scores: np.ndarray
    score: float

    @property
    def effective_K(self) -> int:
        return int(np.count_nonzero(self.counts))

    @property
    def densities(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), np.nan)

    def band(self, k: int) -> SegmentStats:
        return SegmentStats(int(self.counts[k]), float(self.sums[k]), float(self.sumsqs[k]))

    def same_split(self, other: "Segmentation") -> bool:
        return np.array_equal(self.boundaries, other.boundaries)


def _prefix(chain):
    counts = np.asarray(chain.counts)
    if counts.size == 0:
        raise BandsegError("cannot segment an empty chain")
    pc = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    ps = np.concatenate([[0.0], np.cumsum(np.asarray(chain.sums, dtype=float))])
    pq = np.concatenate([[0.0], np.cumsum(np.asarray(chain.sumsqs, dtype=float))])
    return pc, ps, pq


def _finish(chain, K: int, bounds, model: ScoreModel) -> Segmentation:
    pc, ps, pq = _prefix(chain)
    b = np.asarray(bounds, dtype=np.int64)
    counts = pc[b[1:]] - pc[b[:-1]]
    sums = ps[b[1:]] - ps[b[:-1]]
    sumsqs = pq[b[1:]] - pq[b[:-1]]
    scores = segment_scores(counts, sums, sumsqs, model)
    return Segmentation(K, b, counts, sums, sumsqs, scores, float(math.fsum(scores)))


def _check_k(K):
    if int(K) != K or K < 1:
        raise ValueError("K must be a positive integer")
    return int(K)


def segment_dp(chain, K: int, model: ScoreModel) -> Segmentation:
    """Best split of the chain into K consecutive groups.

    ``chain`` needs ``counts``, ``sums`` and ``sumsqs`` arrays (a
    BorderChain or SparseChain).  Among splits whose score is within a
    relative ``TIE_TOL`` of the optimum, the one with the lexicographically
    smallest boundaries (smallest inner bands) is returned.
    """
    K = _check_k(K)
    pc, ps, pq = _prefix(chain)
    L = len(pc) - 1
    k_eff = min(K, L)

    def row(i):
        # scores of merging segments i..j-1 for j = 0..L (-inf unless j > i)
        out = np.full(L + 1, -np.inf)
        j = np.arange(i + 1, L + 1)
        out[i + 1:] = segment_scores(pc[j] - pc[i], ps[j] - ps[i], pq[j] - pq[i], model)
        return out

    rows = [row(i) for i in range(L)]
    # g[k, i]: best score of segments i..L-1 split into k groups
    g = np.full((k_eff + 1, L + 1), -np.inf)
    g[0, L] = 0.0
    for k in range(1, k_eff + 1):
        for i in range(L):
            g[k, i] = np.max(rows[i] + g[k - 1])

    best = g[k_eff, 0]
    tol = TIE_TOL * max(1.0, abs(best))
    bounds = [0]
    i = 0
    for k in range(k_eff, 0, -1):
        cand = rows[i] + g[k - 1]
        j = int(np.flatnonzero(cand >= cand.max() - tol)[0])
        bounds.append(j)
        i = j
    bounds = [0] * (K - k_eff) + bounds
    return _finish(chain, K, bounds, model)


def brute_force_segmentation(chain, K: int, model: ScoreModel, limit: int = 1_000_000) -> Segmentation:
    """Exhaustive search over all splits, same tie rule as :func:`segment_dp`."""
    K = _check_k(K)
    pc, ps, pq = _prefix(chain)
    L = len(pc) - 1
    k_eff = min(K, L)
    if math.comb(L - 1, k_eff - 1) > limit:
        raise InstanceTooLargeError(f"more than {limit} splits to enumerate")
    splits = []
    scores = []
    for cut in itertools.combinations(range(1, L), k_eff - 1):
        b = np.array((0,) + cut + (L,))
        s = segment_scores(pc[b[1:]] - pc[b[:-1]], ps[b[1:]] - ps[b[:-1]],
                           pq[b[1:]] - pq[b[:-1]], model)
        splits.append(b)
        scores.append(math.fsum(s))
    scores = np.array(scores)
    tol = TIE_TOL * max(1.0, abs(scores.max()))
    pick = int(np.flatnonzero(scores >= scores.max() - tol)[0])
    bounds = [0] * (K - k_eff) + list(splits[pick])
    return _finish(chain, K, bounds, model)


def bands_to_staircases(chain, segmentation: Segmentation, staircase_of=None) -> list[Staircase]:
    """Nested corners bounding the bands, from the base to the full domain.

    ``staircase_of(k)`` returns the staircase of corner ``U_k`` of the chain;
    it defaults to ``chain.staircase``.
    """
    get = staircase_of if staircase_of is not None else chain.staircase
    return [get(int(b)) for b in segmentation.boundaries]


__all__ = ["Segmentation", "segment_dp", "brute_force_segmentation", "bands_to_staircases"]
