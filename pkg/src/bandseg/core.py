"""Grid, corner and segment types plus log-linear segment scores.

Conventions used throughout the package:

* A grid has ``M`` rows and ``N`` columns.  Its *domain* is the set of entries
  that get segmented.  In rectangle mode every entry outside an optional base
  corner is in the domain; in triangle mode (an ``n x n`` adjacency matrix)
  the domain is the strict upper triangle and the base is the diagonal.
* Every row ``r`` has in-domain columns ``start[r] .. N - 1``.  A corner keeps
  a leading run of those columns in every row, encoded by its
  :class:`Staircase` (number of kept in-domain columns per row).
* "Toward the base" means left/up in rectangle mode and left/down (toward the
  diagonal) in triangle mode.  Corners are closed in that direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

DENSITY_EPS = 1e-12
_EXACT_LIMIT = 2.0 ** 52


class BandsegError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(BandsegError, ValueError):
    """Data is incompatible with the chosen score model."""


class EmptySegmentError(BandsegError, ValueError):
    pass


class InstanceTooLargeError(BandsegError, ValueError):
    pass


class ConvergenceError(BandsegError, RuntimeError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


# ---------------------------------------------------------------------------
# grids and corners
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ValueGrid:
    """A real matrix together with the domain that is to be segmented.

    Args:
      values: (M, N) array.  Entries outside the domain are ignored and
        stored as zero.
      triangle: if True the grid is the strict upper triangle of a square
        matrix (a weighted adjacency matrix in some vertex order).
      base: rectangle mode only; per-row number of leading columns that form
        the base corner ``B``.  ``None`` means the empty corner.
    """

    values: np.ndarray
    triangle: bool = False
    base: np.ndarray | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("grid values must be a 2-D array")
        m, n = values.shape
        if self.triangle:
            if m != n:
                raise ValueError("triangle mode requires a square matrix")
            if self.base is not None:
                raise ValueError("triangle mode has the diagonal as its fixed base")
            base = None
        elif self.base is None:
            base = np.zeros(m, dtype=np.int64)
        else:
            base = np.asarray(self.base, dtype=np.int64)
            if base.shape != (m,) or np.any(base < 0) or np.any(base > n):
                raise ValueError("base must hold one width in [0, N] per row")
            if np.any(np.diff(base) > 0):
                raise ValueError("base widths must be non-increasing")
        mask = self._build_mask(m, n, base)
        if not np.all(np.isfinite(values[mask])):
            raise ValueError("grid values must be finite")
        values[~mask] = 0.0
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "base", base)

    def _build_mask(self, m, n, base):
        cols = np.arange(n)
        if self.triangle:
            return cols[None, :] > np.arange(m)[:, None]
        return cols[None, :] >= base[:, None]

    @classmethod
    def from_adjacency(cls, adjacency: np.ndarray) -> "ValueGrid":
        """Upper-triangle view of a symmetric (or upper-triangular) matrix."""
        return cls(np.triu(np.asarray(adjacency, dtype=float), 1), triangle=True)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @cached_property
    def mask(self) -> np.ndarray:
        m, n = self.shape
        return self._build_mask(m, n, self.base)

    @cached_property
    def row_start(self) -> np.ndarray:
        m, n = self.shape
        if self.triangle:
            return np.minimum(np.arange(m) + 1, n).astype(np.int64)
        return self.base.copy()

    @cached_property
    def row_order(self) -> np.ndarray:
        """Rows arranged so that corner end-columns are non-increasing."""
        m = self.shape[0]
        return np.arange(m)[::-1].copy() if self.triangle else np.arange(m)

    @property
    def size(self) -> int:
        """Number of in-domain entries."""
        return int(self.mask.sum())

    @cached_property
    def index(self) -> np.ndarray:
        """Row-major flat index of each in-domain entry, -1 elsewhere."""
        idx = np.full(self.shape, -1, dtype=np.int64)
        idx[self.mask] = np.arange(self.size)
        return idx

    @cached_property
    def coords(self) -> np.ndarray:
        """(size, 2) array of (row, col) for the flat index."""
        return np.argwhere(self.mask)

    @cached_property
    def flat_values(self) -> np.ndarray:
        return self.values[self.mask]

    @cached_property
    def is_integral(self) -> bool:
        v = self.flat_values
        return bool(np.all(v == np.round(v)) and np.abs(v).sum() < _EXACT_LIMIT)

    @cached_property
    def is_binary(self) -> bool:
        v = self.flat_values
        return bool(np.all((v == 0) | (v == 1)))

    @cached_property
    def neighbours(self) -> tuple[np.ndarray, np.ndarray]:
        """Flat-index neighbour tables ``(toward_base, away_from_base)``.

        Each is a (size, 2) array padded with -1.
        """
        idx = self.index
        m, n = self.shape
        rc = self.coords
        r, c = rc[:, 0], rc[:, 1]

        def look(rr, cc):
            ok = (rr >= 0) & (rr < m) & (cc >= 0) & (cc < n)
            out = np.full(rr.shape, -1, dtype=np.int64)
            out[ok] = idx[rr[ok], cc[ok]]
            return out

        if self.triangle:
            toward = np.stack([look(r, c - 1), look(r + 1, c)], axis=1)
            away = np.stack([look(r, c + 1), look(r - 1, c)], axis=1)
        else:
            toward = np.stack([look(r - 1, c), look(r, c - 1)], axis=1)
            away = np.stack([look(r + 1, c), look(r, c + 1)], axis=1)
        return toward, away

    def full_staircase(self) -> "Staircase":
        m, n = self.shape
        return Staircase(n - self.row_start)

    def empty_staircase(self) -> "Staircase":
        return Staircase(np.zeros(self.shape[0], dtype=np.int64))


@dataclass(frozen=True, eq=False)
class Staircase:
    """A corner given by the number of included in-domain columns per row.

    In triangle mode row ``x`` covers columns ``x+1 .. x+widths[x]``.
    """

    widths: np.ndarray

    def __post_init__(self):
        w = np.array(self.widths, dtype=np.int64).reshape(-1)
        w.setflags(write=False)
        object.__setattr__(self, "widths", w)

    def __eq__(self, other):
        if not isinstance(other, Staircase):
            return NotImplemented
        return np.array_equal(self.widths, other.widths)

    def __hash__(self):
        return hash(self.widths.tobytes())

    @property
    def area(self) -> int:
        return int(self.widths.sum())

    def ends(self, grid: ValueGrid) -> np.ndarray:
        """Exclusive end column of each row."""
        return grid.row_start + self.widths

    def mask(self, grid: ValueGrid) -> np.ndarray:
        cols = np.arange(grid.shape[1])
        return grid.mask & (cols[None, :] < self.ends(grid)[:, None])

    def contains(self, other: "Staircase") -> bool:
        return bool(np.all(self.widths >= other.widths))

    @classmethod
    def from_mask(cls, mask: np.ndarray, grid: ValueGrid) -> "Staircase":
        """Staircase of a corner given as a boolean mask (not validated)."""
        return cls((np.asarray(mask) & grid.mask).sum(axis=1))


def validate_staircase(s: Staircase, grid: ValueGrid) -> bool:
    """True iff ``s`` encodes a corner of ``grid`` containing its base."""
    w = np.asarray(s.widths)
    m, n = grid.shape
    if w.shape != (m,):
        return False
    if np.any(w < 0) or np.any(w > n - grid.row_start):
        return False
    ends = (grid.row_start + w)[grid.row_order]
    return bool(np.all(np.diff(ends) <= 0))


def enumerate_staircases(grid: ValueGrid, limit: int = 100_000) -> np.ndarray:
    """All corners of ``grid`` as an (count, M) width array.

    Raises InstanceTooLargeError when there are more than ``limit``.
    """
    order = grid.row_order
    n = grid.shape[1]
    start = grid.row_start[order]
    out: list[list[int]] = []

    def rec(k, prev_end, acc):
        if len(out) > limit:
            raise InstanceTooLargeError(f"more than {limit} corners")
        if k == len(order):
            out.append(acc.copy())
            return
        lo = start[k]
        for end in range(lo, prev_end + 1):
            acc.append(end - lo)
            rec(k + 1, end, acc)
            acc.pop()

    rec(0, n, [])
    widths = np.zeros((len(out), grid.shape[0]), dtype=np.int64)
    if out:
        widths[:, order] = np.array(out, dtype=np.int64)
    return widths


# ---------------------------------------------------------------------------
# segment statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SegmentStats:
    count: int = 0
    sum: float = 0.0
    sum_sq: float = 0.0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if self.count == 0 and (self.sum != 0 or self.sum_sq != 0):
            raise ValueError("an empty segment has zero sums")

    @classmethod
    def of(cls, values: Iterable[float]) -> "SegmentStats":
        v = [float(x) for x in values]
        return cls(len(v), math.fsum(v), math.fsum(x * x for x in v))

    def __add__(self, other: "SegmentStats") -> "SegmentStats":
        return SegmentStats(
            self.count + other.count, self.sum + other.sum, self.sum_sq + other.sum_sq
        )

    @property
    def density(self) -> float:
        return density(self)


def density(stats: SegmentStats) -> float:
    if stats.count <= 0:
        raise EmptySegmentError("empty segment has no density")
    return stats.sum / stats.count


def _as_exact_int(x: float) -> int | None:
    if float(x).is_integer() and abs(x) < _EXACT_LIMIT:
        return int(x)
    return None


def compare_density(a: SegmentStats, b: SegmentStats) -> int:
    """Sign of ``density(a) - density(b)``: -1, 0 or 1.

    Integral sums are compared by cross-multiplication, anything else with an
    absolute tolerance of ``DENSITY_EPS``.
    """
    if a.count <= 0 or b.count <= 0:
        raise EmptySegmentError("empty segment has no density")
    sa, sb = _as_exact_int(a.sum), _as_exact_int(b.sum)
    if sa is not None and sb is not None:
        lhs, rhs = sa * b.count, sb * a.count
        return (lhs > rhs) - (lhs < rhs)
    da, db = a.sum / a.count, b.sum / b.count
    if abs(da - db) <= DENSITY_EPS:
        return 0
    return 1 if da > db else -1


# ---------------------------------------------------------------------------
# score models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreModel:
    """A log-linear model with sufficient statistic S(x) = x.

    kind is one of ``"bernoulli"``, ``"poisson"`` or ``"gaussian"``; the
    gaussian has fixed variance ``variance``.
    """

    kind: str = "bernoulli"
    variance: float = 1.0

    KINDS = ("bernoulli", "poisson", "gaussian")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown model {self.kind!r}; expected one of {self.KINDS}")
        if not self.variance > 0:
            raise ValueError("variance must be positive")

    @classmethod
    def bernoulli(cls) -> "ScoreModel":
        return cls("bernoulli")

    @classmethod
    def poisson(cls) -> "ScoreModel":
        return cls("poisson")

    @classmethod
    def gaussian(cls, variance: float = 1.0) -> "ScoreModel":
        return cls("gaussian", variance)

    @classmethod
    def infer(cls, values: np.ndarray) -> "ScoreModel":
        """Bernoulli for 0/1 data, Poisson for counts, Gaussian otherwise."""
        v = np.asarray(values, dtype=float)
        if np.all((v == 0) | (v == 1)):
            return cls.bernoulli()
        if np.all(v >= 0) and np.all(v == np.round(v)):
            return cls.poisson()
        return cls.gaussian()

    def check_values(self, values: np.ndarray) -> None:
        v = np.asarray(values, dtype=float)
        if self.kind == "bernoulli" and not np.all((v == 0) | (v == 1)):
            raise ModelError("bernoulli model requires binary values")
        if self.kind == "poisson" and np.any(v < 0):
            raise ModelError("poisson model requires non-negative values")

    def log_partition(self, r: float) -> float:
        """Z(r) for the natural parameter r (constant terms dropped)."""
        if self.kind == "bernoulli":
            return -float(np.logaddexp(0.0, r))
        if self.kind == "poisson":
            return -math.exp(r)
        return -self.variance * r * r / 2.0

    def conditional_score(self, stats: SegmentStats, r: float) -> float:
        """Log-likelihood of a segment under parameter ``r``.

        The gaussian includes its data term -sum_sq / (2 variance) so that
        ``segment_score`` is exactly the supremum of this over ``r``.
        """
        s = stats.count * self.log_partition(r) + r * stats.sum
        if self.kind == "gaussian":
            s -= stats.sum_sq / (2.0 * self.variance)
        return s


def _xlogx_ratio(a, n):
    """a * log(a / n) with 0 log 0 = 0 (vectorised)."""
    a = np.asarray(a, dtype=float)
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a > 0, a * np.log(np.where(a > 0, a, 1.0) / np.where(n > 0, n, 1.0)), 0.0)
    return out


def segment_scores(counts, sums, sumsqs, model: ScoreModel) -> np.ndarray:
    """Vectorised maximum log-likelihood of segments; empty segments score 0."""
    n = np.asarray(counts, dtype=float)
    s = np.asarray(sums, dtype=float)
    if model.kind == "bernoulli":
        out = _xlogx_ratio(s, n) + _xlogx_ratio(n - s, n)
    elif model.kind == "poisson":
        out = _xlogx_ratio(s, n) - s
    else:
        q = np.asarray(sumsqs, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            sse = np.where(n > 0, q - s * s / np.where(n > 0, n, 1.0), 0.0)
        out = -np.maximum(sse, 0.0) / (2.0 * model.variance)
    return np.where(n > 0, out, 0.0)


def segment_score(stats: SegmentStats, model: ScoreModel) -> float:
    n, s = stats.count, stats.sum
    if model.kind == "bernoulli":
        tol = 1e-9 * max(1.0, abs(s))
        if s < -tol or s > n + tol or abs(stats.sum_sq - s) > tol:
            raise ModelError("bernoulli model requires binary values")
    elif model.kind == "poisson" and s < 0:
        raise ModelError("poisson model requires non-negative values")
    return float(segment_scores([n], [s], [stats.sum_sq], model)[0])


# ---------------------------------------------------------------------------
# border chains
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BorderChain:
    """Borders U_0 = base, ..., U_L = everything, stored as differences.

    ``labels[r, c]`` is the index ``i`` of the segment ``C_{i+1} = U_{i+1} \\ U_i``
    holding in-domain entry (r, c), and -1 outside the domain.  Corner ``U_k``
    is therefore ``labels < k``.
    """

    labels: np.ndarray
    counts: np.ndarray
    sums: np.ndarray
    sumsqs: np.ndarray

    def __post_init__(self):
        for name, dt in (("labels", np.int64), ("counts", np.int64),
                         ("sums", float), ("sumsqs", float)):
            arr = np.array(getattr(self, name), dtype=dt)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_labels(cls, labels: np.ndarray, grid: ValueGrid) -> "BorderChain":
        labels = np.asarray(labels, dtype=np.int64)
        lab = labels[grid.mask]
        n_seg = int(lab.max()) + 1 if lab.size else 0
        v = grid.flat_values
        counts = np.bincount(lab, minlength=n_seg)
        sums = np.bincount(lab, weights=v, minlength=n_seg)
        sumsqs = np.bincount(lab, weights=v * v, minlength=n_seg)
        full = np.full(grid.shape, -1, dtype=np.int64)
        full[grid.mask] = lab
        return cls(full, counts, sums, sumsqs)

    def __len__(self) -> int:
        return len(self.counts)

    def __eq__(self, other):
        if not isinstance(other, BorderChain):
            return NotImplemented
        return len(self) == len(other) and np.array_equal(self.labels, other.labels)

    __hash__ = None

    def segment(self, i: int) -> SegmentStats:
        return SegmentStats(int(self.counts[i]), float(self.sums[i]), float(self.sumsqs[i]))

    @property
    def segments(self) -> list[SegmentStats]:
        return [self.segment(i) for i in range(len(self))]

    @property
    def densities(self) -> np.ndarray:
        return self.sums / self.counts

    def corner_mask(self, k: int) -> np.ndarray:
        return (self.labels >= 0) & (self.labels < k)

    def staircase(self, k: int) -> Staircase:
        return Staircase(((self.labels >= 0) & (self.labels < k)).sum(axis=1))

    def staircases(self) -> list[Staircase]:
        return [self.staircase(k) for k in range(len(self) + 1)]

    def score(self, model: ScoreModel) -> float:
        return float(segment_scores(self.counts, self.sums, self.sumsqs, model).sum())

    def is_strictly_decreasing(self) -> bool:
        segs = self.segments
        return all(compare_density(a, b) > 0 for a, b in zip(segs, segs[1:]))

    def progress_vector(self) -> list[tuple[SegmentStats, int]]:
        """Interleaved (segment, cumulative size) pairs used to track progress."""
        sizes = np.cumsum(self.counts)
        return [(self.segment(i), int(sizes[i])) for i in range(len(self))]


def compare_progress(a: Sequence[tuple[SegmentStats, int]],
                     b: Sequence[tuple[SegmentStats, int]]) -> int:
    """Lexicographic comparison of two progress vectors (densities exact)."""
    for (sa, na), (sb, nb) in zip(a, b):
        c = compare_density(sa, sb)
        if c:
            return c
        if na != nb:
            return 1 if na > nb else -1
    return (len(a) > len(b)) - (len(a) < len(b))


def stats_from_values(values: np.ndarray) -> SegmentStats:
    return SegmentStats.of(np.asarray(values, dtype=float).ravel())


__all__ = [
    "BandsegError", "ModelError", "EmptySegmentError", "InstanceTooLargeError",
    "ConvergenceError", "ValueGrid", "Staircase", "SegmentStats", "ScoreModel",
    "BorderChain", "density", "compare_density", "segment_score", "segment_scores",
    "validate_staircase", "enumerate_staircases", "compare_progress", "DENSITY_EPS",
]
