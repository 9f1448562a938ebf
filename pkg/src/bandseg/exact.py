"""Exact border discovery through isotonic regression on the grid.

The fitted surface of an L2 isotonic regression (non-increasing away from the
base) is constant on border differences, and thresholding it at each of its
distinct levels gives every border.  The regression is solved by splitting on
the mean: the largest-excess closure inside a ring of two nested corners is
found by a dynamic program over rows, and both halves are solved recursively.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from ._kernels import best_closure
from .core import (
    DENSITY_EPS,
    BorderChain,
    InstanceTooLargeError,
    SegmentStats,
    ValueGrid,
    compare_density,
    enumerate_staircases,
)

MAX_DENSE_ENTRIES = 50_000_000
_EXACT_PRODUCT = 2.0 ** 53


@dataclass(frozen=True, eq=False)
class IsotonicFit:
    """Monotone fit of a grid.

    ``f`` holds the fitted value of every in-domain entry (0 elsewhere).
    ``levels`` assigns each in-domain entry to a constant piece of the fit
    (-1 elsewhere); ``level_counts``/``level_sums`` are the data statistics of
    the pieces, so the fitted value of a piece is exactly sum / count.
    """

    f: np.ndarray
    levels: np.ndarray | None = None
    level_counts: np.ndarray | None = None
    level_sums: np.ndarray | None = None

    def is_monotone(self, grid: ValueGrid, tol: float = 1e-12) -> bool:
        f = self.f
        m = grid.mask
        ok = True
        if grid.triangle:
            # toward the diagonal: left and down
            both = m[:, 1:] & m[:, :-1]
            ok &= bool(np.all(f[:, :-1][both] >= f[:, 1:][both] - tol))
            both = m[1:, :] & m[:-1, :]
            ok &= bool(np.all(f[1:, :][both] >= f[:-1, :][both] - tol))
        else:
            both = m[:, 1:] & m[:, :-1]
            ok &= bool(np.all(f[:, :-1][both] >= f[:, 1:][both] - tol))
            both = m[1:, :] & m[:-1, :]
            ok &= bool(np.all(f[:-1, :][both] >= f[1:, :][both] - tol))
        return ok

    def sse(self, grid: ValueGrid) -> float:
        d = (self.f - grid.values)[grid.mask]
        return float(d @ d)


def _cumulative(grid: ValueGrid):
    v = grid.values
    m, n = v.shape
    cum = np.zeros((m, n + 1))
    np.cumsum(v, axis=1, out=cum[:, 1:])
    return cum


def _shrink_hi(grid: ValueGrid) -> np.ndarray:
    """End columns of the smallest corner holding every non-zero entry."""
    nz = (grid.values != 0) & grid.mask
    m, n = grid.shape
    last = np.where(nz.any(axis=1), n - np.argmax(nz[:, ::-1], axis=1), 0)
    ends = np.maximum(last, grid.row_start)
    # close toward the base: ends must be non-increasing along row_order
    order = grid.row_order
    ends[order] = np.maximum.accumulate(ends[order][::-1])[::-1]
    return ends


def grid_isotonic(grid: ValueGrid, shrink: bool = False) -> IsotonicFit:
    """L2-optimal fit that does not increase when moving away from the base.

    Args:
      grid: the data.
      shrink: first restrict the problem to the smallest corner containing
        all non-zero entries (everything outside is fitted with 0).  Only
        valid for non-negative data, where it speeds up sparse inputs.

    Returns:
      IsotonicFit with the fitted values and its constant pieces.
    """
    m, n = grid.shape
    if m * n > MAX_DENSE_ENTRIES:
        raise InstanceTooLargeError(
            f"dense mode requires O(NM) memory; {m}x{n} exceeds {MAX_DENSE_ENTRIES} entries")
    try:
        cum = _cumulative(grid)
        labels = np.full((m, n), -1, dtype=np.int64)
    except MemoryError as exc:
        raise InstanceTooLargeError("dense mode requires O(NM) memory") from exc

    total_abs = float(np.abs(grid.flat_values).sum())
    integral = grid.is_integral and grid.size * max(total_abs, 1.0) < _EXACT_PRODUCT

    order = grid.row_order
    lo = grid.row_start[order].astype(np.int64)
    hi = np.full(m, n, dtype=np.int64)
    counts: list[int] = []
    sums: list[float] = []

    if shrink:
        if np.any(grid.flat_values < 0):
            raise ValueError("shrinking is only valid for non-negative data")
        cut = _shrink_hi(grid)[order]
        outer = hi > cut
        if np.any(outer):
            rows = order[outer]
            for r, a, b in zip(rows, cut[outer], hi[outer]):
                labels[r, a:b] = 0
            counts.append(int((hi - cut).sum()))
            sums.append(0.0)
        hi = cut

    active = lo < hi
    stack = [(order[active], lo[active], hi[active])]
    while stack:
        rows, a, b = stack.pop()
        if rows.size == 0:
            continue
        cnt = int((b - a).sum())
        tot = float(cum[rows, b].sum() - cum[rows, a].sum())
        gain, x_cnt, ends = best_closure(cum, rows, a, b, cnt, tot, integral)
        if integral:
            split = gain > 0
        else:
            split = gain > DENSITY_EPS * max(x_cnt, 1)
        if split and 0 < x_cnt < cnt:
            inner = ends > a
            outer = b > ends
            stack.append((rows[outer], ends[outer], b[outer]))
            stack.append((rows[inner], a[inner], ends[inner]))
            continue
        gid = len(counts)
        for r, c0, c1 in zip(rows, a, b):
            labels[r, c0:c1] = gid
        if integral:
            tot = float(round(tot))
        counts.append(cnt)
        sums.append(tot)

    counts_a = np.array(counts, dtype=np.int64)
    sums_a = np.array(sums, dtype=float)
    if not integral and counts:
        # recompute piece sums directly to avoid prefix-sum cancellation
        lab = labels[grid.mask]
        sums_a = np.bincount(lab, weights=grid.flat_values, minlength=len(counts))
    f = np.zeros((m, n))
    if counts:
        dens = sums_a / np.maximum(counts_a, 1)
        f[grid.mask] = dens[labels[grid.mask]]
    return IsotonicFit(f, labels, counts_a, sums_a)


def _merge_levels(stats: list[SegmentStats]) -> tuple[np.ndarray, int]:
    """Rank pieces by decreasing density, merging equal densities."""
    idx = sorted(range(len(stats)),
                 key=functools.cmp_to_key(lambda i, j: -compare_density(stats[i], stats[j])))
    rank = np.empty(len(stats), dtype=np.int64)
    k = -1
    prev = None
    for i in idx:
        if prev is None or compare_density(stats[prev], stats[i]) != 0:
            k += 1
        rank[i] = k
        prev = i
    return rank, k + 1


def borders_from_fit(fit: IsotonicFit, grid: ValueGrid) -> BorderChain:
    """Chain of borders obtained by thresholding the fit at each of its levels."""
    mask = grid.mask
    if fit.levels is not None:
        lab = fit.levels[mask]
    else:
        _, lab = np.unique(-fit.f[mask], return_inverse=True)
    n_pieces = int(lab.max()) + 1 if lab.size else 0
    v = grid.flat_values
    counts = np.bincount(lab, minlength=n_pieces)
    sums = np.bincount(lab, weights=v, minlength=n_pieces)
    if grid.is_integral:
        sums = np.round(sums)
    used = counts > 0
    stats = [SegmentStats(int(c), float(s)) for c, s in zip(counts, sums)]
    rank = np.full(n_pieces, -1, dtype=np.int64)
    sub_rank, _ = _merge_levels([stats[i] for i in np.flatnonzero(used)])
    rank[used] = sub_rank
    labels = np.full(grid.shape, -1, dtype=np.int64)
    labels[mask] = rank[lab]
    return BorderChain.from_labels(labels, grid)


def exact_borders(grid: ValueGrid, shrink: bool = False) -> BorderChain:
    """brd(D) via isotonic regression."""
    return borders_from_fit(grid_isotonic(grid, shrink=shrink), grid)


# ---------------------------------------------------------------------------
# brute-force oracles
# ---------------------------------------------------------------------------


class CornerTable:
    """Every corner of a small grid with its statistics.

    Corners are rows of ``widths``; ``subset[i, j]`` tells whether corner i is
    contained in corner j.
    """

    def __init__(self, grid: ValueGrid, limit: int = 100_000):
        self.grid = grid
        self.widths = enumerate_staircases(grid, limit=limit)
        ends = grid.row_start[None, :] + self.widths
        cols = np.arange(grid.shape[1])
        full = (cols[None, None, :] < ends[:, :, None]) & grid.mask[None]
        self.masks = full[:, grid.mask]
        v = grid.flat_values
        self.counts = self.masks.sum(axis=1).astype(np.int64)
        self.sums = self.masks.astype(float) @ v
        self.exact = grid.is_integral
        if self.exact:
            self.sums = np.round(self.sums)
        w = self.widths
        if len(w) ** 2 * w.shape[1] > 5e8:
            raise InstanceTooLargeError("too many corners for a pairwise table")
        self.subset = np.all(w[:, None, :] <= w[None, :, :], axis=2)

    def __len__(self):
        return len(self.widths)

    def _ring_density(self):
        """density of corner j minus corner i for proper subsets i of j."""
        dc = self.counts[None, :] - self.counts[:, None]
        ds = self.sums[None, :] - self.sums[:, None]
        proper = self.subset & (dc > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = np.where(proper, ds / np.where(proper, dc, 1), np.nan)
        return proper, dc, ds, dens

    def _cmp(self, c1, s1, c2, s2):
        return compare_density(SegmentStats(int(c1), float(s1)), SegmentStats(int(c2), float(s2)))

    def is_border(self) -> np.ndarray:
        proper, dc, ds, dens = self._ring_density()
        out = np.zeros(len(self), dtype=bool)
        for u in range(len(self)):
            inner = np.flatnonzero(proper[:, u])
            outer = np.flatnonzero(proper[u, :])
            if inner.size == 0 or outer.size == 0:
                out[u] = True
                continue
            x = inner[np.argmin(dens[inner, u])]
            y = outer[np.argmax(dens[u, outer])]
            # border iff every outer ring is strictly sparser than every inner ring
            out[u] = self._cmp(dc[u, y], ds[u, y], dc[x, u], ds[x, u]) < 0
        return out

    def maxc(self, u: int) -> int:
        """Index of the largest corner V > U with the densest V minus U."""
        _, dc, ds, dens = self._ring_density()
        cand = np.flatnonzero(self.subset[u] & (dc[u] > 0))
        best = cand[0]
        for j in cand[1:]:
            c = self._cmp(dc[u, j], ds[u, j], dc[u, best], ds[u, best])
            if c > 0 or (c == 0 and self.counts[j] > self.counts[best]):
                best = j
        return int(best)

    def minc(self, u: int) -> int:
        """Index of the smallest corner V < U with the sparsest U minus V."""
        _, dc, ds, dens = self._ring_density()
        cand = np.flatnonzero(self.subset[:, u] & (dc[:, u] > 0))
        best = cand[0]
        for i in cand[1:]:
            c = self._cmp(dc[i, u], ds[i, u], dc[best, u], ds[best, u])
            if c < 0 or (c == 0 and self.counts[i] < self.counts[best]):
                best = i
        return int(best)

    def index_of(self, mask: np.ndarray) -> int:
        flat = np.asarray(mask)[self.grid.mask]
        hit = np.flatnonzero(np.all(self.masks == flat[None, :], axis=1))
        if hit.size != 1:
            raise ValueError("mask is not a corner of this grid")
        return int(hit[0])


def brute_force_borders(grid: ValueGrid, table: CornerTable | None = None,
                        limit: int = 100_000) -> BorderChain:
    """Borders straight from the definition by checking every pair of corners.

    ``table`` may be passed to reuse the corner enumeration for many grids of
    the same shape.
    """
    if table is None:
        table = CornerTable(grid, limit=limit)
    elif table.grid is not grid:
        table = _retarget(table, grid)
    keep = np.flatnonzero(table.is_border())
    keep = keep[np.argsort(table.counts[keep], kind="stable")]
    if np.any(np.diff(table.counts[keep]) == 0):
        raise AssertionError("borders with equal size must coincide")
    labels_flat = np.full(grid.size, -1, dtype=np.int64)
    for k, u in enumerate(keep[1:]):
        new = table.masks[u] & (labels_flat < 0)
        labels_flat[new] = k
    labels = np.full(grid.shape, -1, dtype=np.int64)
    labels[grid.mask] = labels_flat
    return BorderChain.from_labels(labels, grid)


def _retarget(table: CornerTable, grid: ValueGrid) -> CornerTable:
    """Share the corner structure of ``table`` with new grid values."""
    if table.grid.shape != grid.shape or table.grid.triangle != grid.triangle or \
            not np.array_equal(table.grid.mask, grid.mask):
        raise ValueError("corner table was built for a different domain")
    new = object.__new__(CornerTable)
    new.grid = grid
    new.widths = table.widths
    new.masks = table.masks
    new.counts = table.counts
    new.subset = table.subset
    new.exact = grid.is_integral
    new.sums = table.masks.astype(float) @ grid.flat_values
    if new.exact:
        new.sums = np.round(new.sums)
    return new


__all__ = [
    "IsotonicFit", "grid_isotonic", "borders_from_fit", "exact_borders",
    "brute_force_borders", "CornerTable", "MAX_DENSE_ENTRIES",
]
