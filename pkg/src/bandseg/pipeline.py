"""End-to-end band discovery: order, borders, segmentation, refinement."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import BandsegError, BorderChain, ScoreModel, Staircase, ValueGrid
from .exact import exact_borders
from .graph import Graph, positions
from .heuristic import heuristic_borders
from .segmentation import Segmentation, bands_to_staircases, segment_dp
from .sparse import sparse_heuristic_borders
from .spectral import fiedler_order, refine_order

MODES = ("exact", "heuristic", "sparse")
ORDER_SOURCES = ("given", "fiedler")


class PipelineError(BandsegError):
    """A failure inside one stage of :func:`discover_bands`."""

    def __init__(self, stage: str, cause: BaseException | str):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


def staircase_polyline(ends: np.ndarray) -> list[list[int]]:
    """Compress per-row end columns to the rows where the end changes.

    ``ends[r]`` is the 1-based last column of row ``r + 1`` (row start minus
    one when the row is empty).  The first and last rows are always kept.
    """
    ends = np.asarray(ends, dtype=np.int64)
    m = ends.shape[0]
    if m == 0:
        return []
    keep = np.ones(m, dtype=bool)
    keep[1:] = ends[1:] != ends[:-1]
    keep[-1] = True
    return [[int(r) + 1, int(ends[r])] for r in np.flatnonzero(keep)]


def polyline_ends(poly, m: int) -> np.ndarray:
    """Inverse of :func:`staircase_polyline`."""
    ends = np.zeros(m, dtype=np.int64)
    for (r, e), nxt in zip(poly, list(poly[1:]) + [[m + 1, None]]):
        ends[r - 1:nxt[0] - 1] = e
    return ends


@dataclass
class BandReport:
    """Result of :func:`discover_bands` in a JSON-friendly form.

    ``order`` lists 1-based vertex ids by position (None for matrices).
    ``boundaries[k]`` is the polyline of corner ``k`` (0 is the base, K the
    whole domain) as ``[row, end]`` pairs with 1-based positions, see
    :func:`staircase_polyline`.  ``bands[k]`` holds the statistics of the
    entries between boundaries ``k`` and ``k + 1``.
    """

    K: int
    effective_K: int
    mode: str
    model: dict
    shape: list
    triangle: bool
    order: list | None
    bands: list
    boundaries: list
    total_score: float
    chain_length: int
    diagnostics: dict = field(default_factory=dict)
    seed: int | None = None
    schema_version: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BandReport":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})

    @property
    def densities(self) -> list:
        return [b["density"] for b in self.bands]

    def validate(self) -> None:
        """Raise BandsegError if the report breaks a structural invariant."""
        m = self.shape[0]
        ends = [polyline_ends(p, m) for p in self.boundaries]
        if len(ends) != self.K + 1 or len(self.bands) != self.K:
            raise BandsegError("report must have K bands and K + 1 boundaries")
        for lo, hi in zip(ends, ends[1:]):
            if np.any(hi < lo):
                raise BandsegError("band boundaries are not nested")
        dens = [d for d in self.densities if d is not None]
        if any(b > a + 1e-12 for a, b in zip(dens, dens[1:])):
            raise BandsegError("band densities increase")
        total = math.fsum(b["score"] for b in self.bands)
        if abs(total - self.total_score) > 1e-9 * max(1.0, abs(total)):
            raise BandsegError("total score differs from the sum of band scores")
        if sum(1 for b in self.bands if b["count"] > 0) != self.effective_K:
            raise BandsegError("effective_K does not match the non-empty bands")


def _default_model(values: np.ndarray) -> ScoreModel:
    return ScoreModel.infer(values)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except (BandsegError, ValueError, ArithmeticError, MemoryError) as exc:
        raise PipelineError(name, exc) from exc


@dataclass
class _Run:
    chain: object
    seg: Segmentation
    staircases: list
    grid: ValueGrid | None
    diag: dict


def _borders(data, mode, model, order, seed, max_iters, stall_window, force_random_every):
    diag = {}
    if mode == "sparse":
        res = sparse_heuristic_borders(data, order=order, model=model, seed=seed,
                                       max_iters=max_iters, stall_window=stall_window,
                                       force_random_every=force_random_every)
        diag.update(lattice_edges=res.lattice_edges, graph_edges=res.graph_edges)
        chain = res.chain
        g = data

        def stair(k):
            return chain.staircase(g, k, order)

        grid = None
    else:
        grid = data.to_grid(order) if isinstance(data, Graph) else data
        if mode == "exact":
            chain = exact_borders(grid)
            res = None
        else:
            res = heuristic_borders(grid, model=model, seed=seed, max_iters=max_iters,
                                    stall_window=stall_window,
                                    force_random_every=force_random_every)
            chain = res.chain
        stair = chain.staircase
    if res is not None:
        diag.update(converged=bool(res.converged), iterations=res.iterations,
                    flip_steps=res.flip_steps, random_steps=res.random_steps,
                    inner_loops=res.inner_loops, cycles_detected=res.cycles_detected,
                    progress_violations=res.progress_violations,
                    initial_chain_score=float(res.initial_score),
                    best_chain_score=float(res.score))
    else:
        diag.update(converged=True)
    return chain, stair, grid, diag


def _run(data, K, mode, model, order, seed, max_iters, stall_window, force_random_every):
    chain, stair, grid, diag = _stage("borders", _borders, data, mode, model, order, seed,
                                      max_iters, stall_window, force_random_every)
    seg = _stage("segmentation", segment_dp, chain, len(chain) if K is None else K, model)
    stairs = bands_to_staircases(chain, seg, stair)
    return _Run(chain, seg, stairs, grid, diag)


def _band_labels(run: _Run, data: Graph, order) -> np.ndarray:
    chain = run.chain
    if not isinstance(chain, BorderChain):
        chain = chain.to_border_chain(data, order)
    lab = chain.labels
    bands = np.searchsorted(run.seg.boundaries[1:], lab, side="right")
    return np.where(lab >= 0, bands, -1)


def discover_bands(data, K: int, model: ScoreModel | str | None = None, mode: str = "heuristic",
                   order_source: str = "fiedler", refine: bool = False, seed: int | None = 0,
                   order=None, max_iters: int = 10_000, stall_window: int = 20,
                   force_random_every: int | None = None, max_refine_rounds: int = 50) -> BandReport:
    """Order the data, find its borders and split them into K bands.

    Args:
      data: a :class:`Graph`, a :class:`ValueGrid` or a 2-D array (a plain
        matrix segmented from its top-left corner).
      K: number of bands; None keeps every chain segment as its own band.
      model: ScoreModel or its kind name; inferred from the values if None.
      mode: ``exact`` (dense isotonic regression), ``heuristic`` (dense
        iteration) or ``sparse`` (edge-only iteration, graphs only).
      order_source: ``fiedler`` or ``given`` (use ``order`` or the identity).
      refine: run the swap refinement (graphs only).
      seed: seed of the randomized heuristics.

    Raises:
      PipelineError: carrying the failing stage in ``.stage``.
    """
    if mode not in MODES:
        raise PipelineError("input", f"unknown mode {mode!r}; expected one of {MODES}")
    if order_source not in ORDER_SOURCES:
        raise PipelineError("input", f"unknown order source {order_source!r}")
    if K is not None:
        if int(K) != K or K < 1:
            raise PipelineError("input", "K must be a positive integer")
        K = int(K)

    is_graph = isinstance(data, Graph)
    if not is_graph:
        grid = data if isinstance(data, ValueGrid) else _stage("input", ValueGrid, data)
        values = grid.flat_values
        if mode == "sparse":
            raise PipelineError("input", "sparse mode needs a graph")
        if order_source == "fiedler":
            raise PipelineError("order", "a Fiedler order needs a graph")
        if refine:
            raise PipelineError("input", "refinement needs a graph")
        data = grid
    else:
        values = data.w if data.n_edges else np.zeros(0)
        if data.n < 2:
            raise PipelineError("input", "graph needs at least two vertices")
    if isinstance(model, str):
        model = _stage("input", ScoreModel, model)
    if model is None:
        model = _default_model(values)
    _stage("input", model.check_values, values)

    if is_graph:
        if order_source == "fiedler":
            order = _stage("order", fiedler_order, data)
        elif order is None:
            order = np.arange(data.n)
        order = _stage("order", lambda o: (positions(o, data.n), np.asarray(o, dtype=np.int64))[1],
                       order)
    else:
        order = None

    args = (K, mode, model)
    kwargs = dict(seed=seed, max_iters=max_iters, stall_window=stall_window,
                  force_random_every=force_random_every)
    run = _run(data, *args, order, **kwargs)
    refine_diag = {}
    if refine and is_graph:
        cache = {order.tobytes(): run}

        def segmenter(o):
            r = _run(data, *args, o, **kwargs)
            cache[o.tobytes()] = r
            return r.seg.score, _band_labels(r, data, o)

        n_bands = K if K is not None else len(run.chain)
        result = _stage("refine", refine_order, data, order, segmenter, n_bands, max_refine_rounds)
        order = result.order
        run = cache[order.tobytes()]
        refine_diag = dict(refinement_rounds=result.rounds, refinement_swaps=result.swaps,
                           pre_refinement_score=float(result.initial_score))

    return _make_report(data, run, K, mode, model, order, seed, refine_diag)


def _make_report(data, run: _Run, K, mode, model, order, seed, extra) -> BandReport:
    seg = run.seg
    K = seg.K
    if isinstance(data, Graph):
        n = data.n
        shape = [n, n]
        triangle = True
        row_start = np.arange(n) + 1
    else:
        shape = list(data.shape)
        triangle = data.triangle
        row_start = data.row_start
    boundaries = [staircase_polyline(row_start + np.asarray(s.widths)) for s in run.staircases]
    bands = []
    for k in range(K):
        st = seg.band(k)
        bands.append(dict(count=st.count, sum=st.sum, sum_sq=st.sum_sq,
                          density=(st.sum / st.count) if st.count else None,
                          score=float(seg.band_scores[k])))
    diag = dict(run.diag)
    diag.update(extra)
    diag["chain_score"] = float(run.chain.score(model))
    return BandReport(
        K=K, effective_K=seg.effective_K, mode=mode,
        model=dict(kind=model.kind, variance=model.variance),
        shape=shape, triangle=bool(triangle),
        order=None if order is None else [int(v) + 1 for v in order],
        bands=bands, boundaries=boundaries, total_score=seg.score,
        chain_length=len(run.chain), diagnostics=diag,
        seed=None if seed is None else int(seed),
    )


def _restart(args):
    data, K, seed, kwargs = args
    return discover_bands(data, K, seed=seed, **kwargs)


def discover_bands_restarts(data, K: int, seeds, jobs: int = 1, **kwargs) -> BandReport:
    """Run :func:`discover_bands` once per seed and keep the best report.

    Runs fan out over ``jobs`` worker processes.  The highest total score
    wins; ties go to the seed listed first, so the result does not depend on
    scheduling.
    """
    seeds = list(seeds)
    if not seeds:
        raise PipelineError("input", "at least one seed is required")
    tasks = [(data, K, s, kwargs) for s in seeds]
    if jobs > 1 and len(seeds) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            reports = list(ex.map(_restart, tasks))
    else:
        reports = [_restart(t) for t in tasks]
    best = reports[0]
    for r in reports[1:]:
        if r.total_score > best.total_score:
            best = r
    best.diagnostics["restarts"] = len(seeds)
    return best


__all__ = ["BandReport", "PipelineError", "discover_bands", "discover_bands_restarts", "staircase_polyline",
           "polyline_ends", "MODES", "ORDER_SOURCES"]
