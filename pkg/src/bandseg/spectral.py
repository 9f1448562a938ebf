"""Vertex orders from the Fiedler vector and a swap-based refinement."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import laplacian

from .core import ConvergenceError
from .graph import Graph, positions

log = logging.getLogger(__name__)

DENSE_EIGEN_LIMIT = 1500


def _fix_sign(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        v = -v
    return v


def fiedler_vector(graph: Graph, tol: float = 1e-8, max_iter: int = 5000) -> np.ndarray:
    """Unit eigenvector of the second-smallest Laplacian eigenvalue.

    The graph must be connected (use :func:`fiedler_order` for the general
    case).  The sign is fixed so that the first non-zero entry is positive.

    Raises:
      ValueError: empty or disconnected graph.
      ConvergenceError: the eigen-residual stays above ``tol``.
    """
    n = graph.n
    if n == 0:
        raise ValueError("graph has no vertices")
    if n == 1:
        return np.ones(1)
    n_comp, _ = graph.components()
    if n_comp > 1:
        raise ValueError(f"graph has {n_comp} connected components; "
                         "order each component separately")
    lap = laplacian(graph.adjacency()).astype(float)
    if n <= DENSE_EIGEN_LIMIT:
        vals, vecs = sla.eigh(lap.toarray(), subset_by_index=[1, 1])
        lam, v = float(vals[0]), vecs[:, 0]
    else:
        lam, v = _sparse_fiedler(lap, tol, max_iter)
    v = v - v.mean()
    v = _fix_sign(v / np.linalg.norm(v))
    residual = float(np.linalg.norm(lap @ v - lam * v))
    if residual > tol:
        raise ConvergenceError(f"Fiedler vector residual {residual:.3g} exceeds {tol:.3g}", residual)
    return v


def _sparse_fiedler(lap: sp.spmatrix, tol: float, max_iter: int):
    """Second eigenpair by shift-invert Lanczos just below zero."""
    n = lap.shape[0]
    scale = max(float(abs(lap).sum(axis=1).max()), 1.0)
    sigma = -1e-3 * scale / n
    try:
        vals, vecs = spla.eigsh(lap.tocsc(), k=2, sigma=sigma, which="LM",
                                tol=tol * 1e-2, maxiter=max_iter,
                                v0=np.linspace(-1.0, 1.0, n))
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError("eigen-solver did not converge", None) from exc
    k = np.argsort(vals)
    vals, vecs = vals[k], vecs[:, k]
    v = vecs[:, 1]
    # deflate the constant vector once more and polish with a Rayleigh quotient
    v = v - v.mean()
    v /= np.linalg.norm(v)
    lam = float(v @ (lap @ v))
    return lam, v


def fiedler_order(graph: Graph, seed=None) -> np.ndarray:
    """Vertices sorted by Fiedler value, one connected component at a time.

    Components are placed largest first (ties: smallest vertex id first) and
    equal Fiedler values are ordered by vertex id.  No random choices are
    made, so ``seed`` is accepted only for interface symmetry.
    """
    n = graph.n
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    n_comp, comp = graph.components()
    members = [np.flatnonzero(comp == c) for c in range(n_comp)]
    members.sort(key=lambda m: (-m.size, m[0]))
    out = []
    for m in members:
        if m.size == 1:
            out.append(m)
            continue
        v = fiedler_vector(graph.subgraph(m))
        out.append(m[np.lexsort((m, v))])
    return np.concatenate(out).astype(np.int64)


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------


def _full_labels(band_labels: np.ndarray) -> np.ndarray:
    """Symmetric band label matrix with -2 on the diagonal."""
    up = np.triu(band_labels, 1)
    full = up + up.T
    np.fill_diagonal(full, -2)
    return full


def band_frontiers(band_labels: np.ndarray, k: int) -> list[tuple[int, int]]:
    """Frontier points (x, y) of the corner formed by bands < k (positions)."""
    n = band_labels.shape[0]
    inside = np.triu((band_labels >= 0) & (band_labels < k), 1)
    has = inside.any(axis=1)
    ends = np.where(has, n - 1 - np.argmax(inside[:, ::-1], axis=1), -1)
    out = []
    for x in range(n):
        if has[x] and (x == 0 or ends[x - 1] < ends[x]):
            out.append((x, int(ends[x])))
    return out


def _twins(full: np.ndarray, x: int, u: int) -> bool:
    diff = full[u] != full[x]
    diff[u] = diff[x] = False
    return not diff.any()


def swap_intervals(full: np.ndarray, x: int, y: int) -> tuple[int, int]:
    """Extent of the swap-safe intervals [x, x2] and [y2, y] of a frontier point.

    Every vertex of an interval has the same band label as its end point
    against every third vertex, so permuting it keeps all entries in their
    bands.
    """
    x2 = x
    while x2 + 1 < y and _twins(full, x, x2 + 1):
        x2 += 1
    y2 = y
    while y2 - 1 > x and _twins(full, y, y2 - 1):
        y2 -= 1
    return x2, y2


@dataclass
class RefineResult:
    order: np.ndarray
    score: float
    initial_score: float
    rounds: int
    swaps: int
    history: list = field(default_factory=list)


def refine_batch(adj: np.ndarray, band_labels: np.ndarray, n_bands: int):
    """One batch of swaps in position space.

    Returns a position permutation ``perm`` (new position k holds old
    position ``perm[k]``) and the number of swaps made.
    """
    n = adj.shape[0]
    full = _full_labels(band_labels)
    a = adj.copy()
    perm = np.arange(n)
    used_x = np.zeros(n, dtype=bool)
    used_y = np.zeros(n, dtype=bool)
    swaps = 0

    def swap(p, q):
        if p == q:
            return
        a[[p, q]] = a[[q, p]]
        a[:, [p, q]] = a[:, [q, p]]
        perm[[p, q]] = perm[[q, p]]

    for k in range(1, n_bands):
        for x, y in band_frontiers(band_labels, k):
            x2, y2 = swap_intervals(full, x, y)
            if used_x[x:x2 + 1].any() or used_y[y2:y + 1].any():
                continue
            us = np.arange(x, x2 + 1)
            vs = np.arange(y2, y + 1)
            block = a[np.ix_(us, vs)]
            ok = (block == 0) & (us[:, None] < vs[None, :])
            if not ok.any():
                continue
            cost = a[np.ix_(us, vs)].sum(axis=1)[:, None] + a[np.ix_(us, vs)].sum(axis=0)[None, :]
            cost = np.where(ok, cost, np.inf)
            iu, iv = np.unravel_index(int(np.argmin(cost)), cost.shape)
            swap(x, int(us[iu]))
            swap(y, int(vs[iv]))
            used_x[x:x2 + 1] = True
            used_y[y2:y + 1] = True
            swaps += 1
    return perm, swaps


def refine_order(graph: Graph, order, segmenter, n_bands: int, max_rounds: int = 50) -> RefineResult:
    """Greedy swap refinement of a vertex order.

    Args:
      graph: the graph.
      order: starting vertex order.
      segmenter: ``f(order) -> (score, band_labels)`` where ``band_labels``
        is the (n, n) matrix of band indices in position space (upper
        triangle, -1 elsewhere).
      n_bands: number of bands K.
      max_rounds: cap on refinement rounds.

    Each round performs one batch of swaps and re-segments.  A round is kept
    only if the score strictly increases; otherwise the order from before the
    round is returned.
    """
    order = np.asarray(order, dtype=np.int64)
    positions(order, graph.n)
    score, labels = segmenter(order)
    result = RefineResult(order, score, score, 0, 0, [score])
    for _ in range(max_rounds):
        adj = (graph.dense_adjacency(order) != 0).astype(np.int8)
        perm, swaps = refine_batch(adj, labels, n_bands)
        if swaps == 0:
            break
        new_order = order[perm]
        new_score, new_labels = segmenter(new_order)
        log.debug("refinement round: %d swaps, score %.6g -> %.6g", swaps, score, new_score)
        if not new_score > score:
            break
        order, score, labels = new_order, new_score, new_labels
        result.rounds += 1
        result.swaps += swaps
        result.history.append(score)
    result.order = order
    result.score = score
    return result


__all__ = [
    "fiedler_vector", "fiedler_order", "refine_order", "refine_batch", "swap_intervals",
    "band_frontiers", "RefineResult", "DENSE_EIGEN_LIMIT",
]
