"""Heuristic border discovery from monotonic entry orders.

An entry order is a permutation of the in-domain entries (as flat indices,
see :attr:`ValueGrid.index`) whose every prefix is a corner.  Borders of an
order are found with a single densest-prefix sweep; new orders are built by
a greedy traversal that always takes the available entry with the largest
key.  Alternating the two converges (the borders stop changing), and the
hybrid loop below mixes flip and random tie-breaking to escape poor fixpoints.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._kernels import traverse_dag, pool_prefixes
from .core import BandsegError, BorderChain, ScoreModel, ValueGrid, compare_progress

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# orders
# ---------------------------------------------------------------------------


def _entry_dag(grid: ValueGrid):
    """CSR child lists (away-from-base neighbours) and in-degrees."""
    toward, away = grid.neighbours
    indegree = (toward >= 0).sum(axis=1).astype(np.int64)
    counts = (away >= 0).sum(axis=1)
    indptr = np.zeros(grid.size + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    children = away[away >= 0].astype(np.int64)
    return indptr, children, indegree


def _as_keys(w, grid: ValueGrid, name: str) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape == grid.shape:
        w = w[grid.mask]
    if w.shape != (grid.size,):
        raise ValueError(f"{name} must have one value per in-domain entry")
    if np.any(np.isnan(w)):
        raise ValueError(f"{name} contain NaN and cannot be ordered")
    return np.ascontiguousarray(w)


def find_order(grid: ValueGrid, weights, tiebreak=None, _dag=None) -> np.ndarray:
    """Greedy monotonic entry order, largest weight first.

    An entry becomes available once all of its toward-base neighbours are in
    the order.  Ties in ``weights`` are broken by ``tiebreak`` (larger
    first) and then by the smaller flat index.

    Args:
      grid: the grid.
      weights: (M, N) array or flat per-entry array of primary keys.
      tiebreak: optional secondary keys of the same shape.

    Returns:
      Flat entry indices in visiting order.
    """
    k1 = _as_keys(weights, grid, "weights")
    k2 = np.zeros_like(k1) if tiebreak is None else _as_keys(tiebreak, grid, "tie-break keys")
    indptr, children, indegree = _dag if _dag is not None else _entry_dag(grid)
    order = traverse_dag(indptr, children, indegree, k1, k2)
    if order.shape[0] != grid.size:
        raise BandsegError("entry availability graph has a cycle")
    return order


def random_monotonic_order(grid: ValueGrid, seed=None) -> np.ndarray:
    """A monotonic entry order from uniform random keys."""
    rng = np.random.default_rng(seed)
    return find_order(grid, np.zeros(grid.size), rng.random(grid.size))


def is_monotonic_order(order, grid: ValueGrid) -> bool:
    """True iff ``order`` is a permutation whose every prefix is a corner."""
    order = np.asarray(order)
    if order.shape != (grid.size,) or not np.array_equal(np.sort(order), np.arange(grid.size)):
        return False
    pos = np.empty(grid.size, dtype=np.int64)
    pos[order] = np.arange(grid.size)
    toward, _ = grid.neighbours
    ok = toward < 0
    ok |= pos[np.maximum(toward, 0)] < pos[:, None]
    return bool(np.all(ok))


def order_to_coords(order, grid: ValueGrid) -> np.ndarray:
    return grid.coords[np.asarray(order)]


def borders_of_order(order, grid: ValueGrid) -> BorderChain:
    """brd(T): repeatedly take the densest extension along the order.

    Ties are resolved towards the longest extension.  Runs in linear time.
    """
    order = np.asarray(order, dtype=np.int64)
    vals = grid.flat_values[order]
    block = pool_prefixes(np.ones(order.shape[0], dtype=np.int64), vals, grid.is_integral)
    flat = np.empty(grid.size, dtype=np.int64)
    flat[order] = block
    labels = np.full(grid.shape, -1, dtype=np.int64)
    labels[grid.mask] = flat
    return BorderChain.from_labels(labels, grid)


# ---------------------------------------------------------------------------
# tie-breakers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TieBreaker:
    """Secondary keys that refine the segment-density weight.

    ``flip`` prefers entries appearing later in the previous order; ``random``
    draws uniform keys from ``rng``.
    """

    kind: str

    def __post_init__(self):
        if self.kind not in ("flip", "random"):
            raise ValueError("tie-breaker kind must be 'flip' or 'random'")

    def keys(self, order: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        n = order.shape[0]
        if self.kind == "flip":
            k = np.empty(n, dtype=float)
            k[order] = np.arange(n)
            return k
        if rng is None:
            raise ValueError("random tie-breaking needs a generator")
        return rng.random(n)


FLIP = TieBreaker("flip")
RANDOM = TieBreaker("random")


def tiebreak_weights(chain_labels: np.ndarray, order: np.ndarray, tb: TieBreaker,
                     rng=None) -> tuple[np.ndarray, np.ndarray]:
    """Lexicographic (primary, secondary) keys for the next traversal.

    The primary key is minus the segment index, which orders entries exactly
    like the density of their segment because chain densities strictly
    decrease.
    """
    return -chain_labels.astype(float), tb.keys(order, rng)


# ---------------------------------------------------------------------------
# hybrid iteration
# ---------------------------------------------------------------------------


class DenseEngine:
    """Order/border operations on the full grid."""

    def __init__(self, grid: ValueGrid):
        self.grid = grid
        self.n_nodes = grid.size
        self._dag = _entry_dag(grid)

    def traverse(self, k1, k2):
        order = traverse_dag(*self._dag, k1, k2)
        if order.shape[0] != self.n_nodes:
            raise BandsegError("entry availability graph has a cycle")
        return order

    def borders(self, order):
        """Chain of an order plus per-node segment labels."""
        chain = borders_of_order(order, self.grid)
        return chain, chain.labels[self.grid.mask]

    def same_chain(self, a: BorderChain, b: BorderChain) -> bool:
        return a == b


@dataclass
class HeuristicResult:
    """Outcome of the hybrid loop.

    ``converged`` is False when ``max_iters`` ran out before the borders were
    stable for ``stall_window`` random steps.
    """

    chain: BorderChain
    score: float
    converged: bool
    iterations: int
    flip_steps: int
    random_steps: int
    inner_loops: int
    cycles_detected: int
    score_history: list = field(default_factory=list)
    progress_violations: int = 0
    final_order: np.ndarray | None = None
    initial_score: float | None = None


def run_hybrid(engine, model: ScoreModel, seed=None, stall_window: int = 20,
               max_iters: int = 10_000, force_random_every: int | None = None,
               check_progress: bool = True, callback=None) -> HeuristicResult:
    """Alternate flip iterations to a two-cycle with single random steps.

    ``engine`` supplies ``n_nodes``, ``traverse(k1, k2)``, ``borders(order)``
    and ``same_chain``.  Every traversal counts as one iteration and is
    reported to ``callback(kind, chain)`` when given.  The best
    chain by score is returned (ties keep the earlier chain).
    """
    if stall_window < 1:
        raise ValueError("stall_window must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be positive")
    rng = np.random.default_rng(seed)
    n = engine.n_nodes

    order = engine.traverse(np.zeros(n), rng.random(n))
    chain, labels = engine.borders(order)
    if callback is not None:
        callback("initial", chain)
    iters = 1
    history = [chain.score(model)]
    best, best_score = chain, history[0]
    stats = dict(flip=0, random=0, loops=0, cycles=0, violations=0)

    def step(tb, prev_order, prev_chain, prev_labels):
        nonlocal iters, best, best_score
        k1, k2 = tiebreak_weights(prev_labels, prev_order, tb, rng)
        new_order = engine.traverse(k1, k2)
        new_chain, new_labels = engine.borders(new_order)
        iters += 1
        stats[tb.kind] += 1
        if callback is not None:
            callback(tb.kind, new_chain)
        if check_progress and not engine.same_chain(new_chain, prev_chain):
            if compare_progress(new_chain.progress_vector(), prev_chain.progress_vector()) <= 0:
                stats["violations"] += 1
                log.warning("progress vector did not increase at iteration %d", iters)
        s = new_chain.score(model)
        history.append(s)
        if s > best_score:
            best, best_score = new_chain, s
        return new_order, new_chain, new_labels

    stall = 0
    converged = False
    while True:
        if stall >= stall_window:
            converged = True
            break
        if iters >= max_iters:
            break
        round_start = chain
        order, chain, labels = step(RANDOM, order, chain, labels)
        stats["loops"] += 1
        two_back = None
        inner = 0
        while iters < max_iters:
            new_order, chain, labels = step(FLIP, order, chain, labels)
            inner += 1
            if np.array_equal(new_order, order) or (
                    two_back is not None and np.array_equal(new_order, two_back)):
                stats["cycles"] += 1
                order = new_order
                break
            two_back, order = order, new_order
            if force_random_every and inner % force_random_every == 0:
                break
        if engine.same_chain(chain, round_start):
            stall += 1
        else:
            stall = 0

    return HeuristicResult(
        chain=best, score=best_score, converged=converged, iterations=iters,
        flip_steps=stats["flip"], random_steps=stats["random"],
        inner_loops=stats["loops"], cycles_detected=stats["cycles"],
        score_history=history, progress_violations=stats["violations"],
        final_order=order, initial_score=history[0],
    )


def heuristic_borders(grid: ValueGrid, model: ScoreModel | None = None, seed=None,
                      stall_window: int = 20, max_iters: int = 10_000,
                      force_random_every: int | None = None) -> HeuristicResult:
    """Approximate brd(D) with the hybrid flip/random loop on the dense grid.

    The model (inferred from the values when omitted) only decides which of
    the visited chains is reported as best.
    """
    if model is None:
        model = ScoreModel.infer(grid.flat_values)
    model.check_values(grid.flat_values)
    return run_hybrid(DenseEngine(grid), model, seed=seed, stall_window=stall_window,
                      max_iters=max_iters, force_random_every=force_random_every)


__all__ = [
    "find_order", "random_monotonic_order", "is_monotonic_order", "borders_of_order",
    "TieBreaker", "FLIP", "RANDOM", "tiebreak_weights", "DenseEngine", "HeuristicResult",
    "run_hybrid", "heuristic_borders", "order_to_coords",
]
