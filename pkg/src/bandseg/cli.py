"""Command line interface: ``bandseg {bands,borders,order,score,synth}``.

Exit codes: 0 success, 1 other failure, 2 malformed input or arguments,
3 the heuristic did not converge (the output is still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import io as bio
from .core import BandsegError, ScoreModel, ValueGrid, segment_scores
from .graph import Graph, positions
from .pipeline import MODES, ORDER_SOURCES, PipelineError, discover_bands, discover_bands_restarts, polyline_ends

EXIT_OK, EXIT_ERROR, EXIT_PARSE, EXIT_NOT_CONVERGED = 0, 1, 2, 3

log = logging.getLogger("bandseg")


def _load(args):
    fmt = args.input_format
    if fmt == "auto":
        fmt = "matrix" if str(args.input).lower().endswith(".csv") else "edges"
    src = sys.stdin if args.input == "-" else args.input
    if fmt == "edges":
        return bio.read_edge_list(src, n=args.n)
    m = bio.read_dense_matrix(src)
    if args.graph:
        if m.shape[0] != m.shape[1]:
            raise bio.ParseError("adjacency matrix must be square")
        return Graph.from_adjacency(m)
    return ValueGrid(m, triangle=args.triangle)


def _read_order(path, n: int) -> np.ndarray:
    vals = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            for tok in line.split():
                try:
                    vals.append(int(tok) - 1)
                except ValueError:
                    raise bio.ParseError(f"bad vertex id {tok!r}", lineno, str(path)) from None
    order = np.array(vals, dtype=np.int64)
    try:
        positions(order, n)
    except ValueError as exc:
        raise bio.ParseError(str(exc), None, str(path)) from None
    return order


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _pipeline_kwargs(args, data):
    order = None
    if args.order_file:
        if not isinstance(data, Graph):
            raise bio.ParseError("--order-file needs a graph input")
        order = _read_order(args.order_file, data.n)
    source = args.order
    if source is None:
        source = "fiedler" if isinstance(data, Graph) and order is None else "given"
    return dict(model=args.model, mode=args.mode, order_source=source, order=order,
                refine=args.refine, max_iters=args.max_iters, stall_window=args.stall_window,
                force_random_every=args.force_random_every)


def cmd_bands(args) -> int:
    data = _load(args)
    kw = _pipeline_kwargs(args, data)
    if args.restarts > 1:
        seeds = [args.seed + i for i in range(args.restarts)]
        report = discover_bands_restarts(data, args.k, seeds, jobs=args.jobs, **kw)
    else:
        report = discover_bands(data, args.k, seed=args.seed, **kw)
    _emit(bio.report_to_json(report), args.out)
    if args.plot_data:
        bio.write_plot_data(report, args.plot_data)
    return EXIT_OK if report.diagnostics.get("converged", True) else EXIT_NOT_CONVERGED


def cmd_borders(args) -> int:
    # every chain segment becomes its own band
    data = _load(args)
    kw = _pipeline_kwargs(args, data)
    report = discover_bands(data, None, seed=args.seed, **kw)
    out = dict(
        order=report.order,
        model=report.model,
        mode=report.mode,
        segments=report.bands,
        borders=report.boundaries,
        chain_score=report.total_score,
        diagnostics=report.diagnostics,
    )
    _emit(json.dumps(out, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n", args.out)
    return EXIT_OK if report.diagnostics.get("converged", True) else EXIT_NOT_CONVERGED


def cmd_order(args) -> int:
    from .spectral import fiedler_order

    data = _load(args)
    if not isinstance(data, Graph):
        raise bio.ParseError("ordering needs a graph input")
    order = fiedler_order(data)
    _emit("".join(f"{v + 1}\n" for v in order), args.out)
    return EXIT_OK


def rescore(report, data) -> dict:
    """Recompute band statistics and scores of a report on its input data."""
    m = report.shape[0]
    ends = np.array([polyline_ends(p, m) for p in report.boundaries])
    if isinstance(data, Graph):
        if report.order is None or len(report.order) != data.n:
            raise bio.ParseError("report order does not match the graph")
        pos = positions(np.asarray(report.order, dtype=np.int64) - 1, data.n)
        pu, pv = pos[data.u], pos[data.v]
        rows, cols, vals = np.minimum(pu, pv), np.maximum(pu, pv), data.w
        row_start = np.arange(m) + 1
    else:
        if list(data.shape) != list(report.shape):
            raise bio.ParseError("report shape does not match the matrix")
        rows, cols = data.coords[:, 0], data.coords[:, 1]
        vals = data.flat_values
        row_start = data.row_start
    # entry (r, c) lies in corner k iff c + 1 <= ends[k, r]
    inside = (cols[None, :] + 1) <= ends[:, rows]
    band = np.argmax(inside, axis=0) - 1
    if np.any(band < 0) or not inside[-1].all():
        raise BandsegError("report boundaries do not cover the data")
    K = report.K
    counts = (ends[1:] - ends[:-1]).sum(axis=1)
    sums = np.bincount(band, weights=vals, minlength=K)
    sumsqs = np.bincount(band, weights=vals * vals, minlength=K)
    if counts.sum() != int((ends[-1] - row_start).sum()):
        raise BandsegError("report boundaries are inconsistent")
    model = ScoreModel(report.model["kind"], report.model["variance"])
    scores = segment_scores(counts, sums, sumsqs, model)
    return dict(
        bands=[dict(count=int(c), sum=float(s), sum_sq=float(q), score=float(x))
               for c, s, q, x in zip(counts, sums, sumsqs, scores)],
        total_score=math.fsum(scores),
    )


def cmd_score(args) -> int:
    data = _load(args)
    report = bio.read_report_json(args.report)
    result = rescore(report, data)
    result["reported_total_score"] = report.total_score
    result["matches"] = bool(abs(result["total_score"] - report.total_score)
                             <= 1e-9 * max(1.0, abs(report.total_score)))
    _emit(json.dumps(result, sort_keys=True, indent=1, allow_nan=False) + "\n", args.out)
    return EXIT_OK if result["matches"] else EXIT_ERROR


def cmd_synth(args) -> int:
    from .synth import generate_banded_graph

    pb = generate_banded_graph(args.n, args.widths, args.probs, seed=args.seed,
                               shuffle=args.shuffle)
    text = "".join(f"{u + 1}\t{v + 1}\n" for u, v in zip(pb.graph.u, pb.graph.v))
    _emit(text, args.out)
    if args.truth_out:
        Path(args.truth_out).write_text("".join(f"{v + 1}\n" for v in pb.order), encoding="utf-8")
    return EXIT_OK


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bandseg", description="Find monotone density bands in graphs and matrices.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def input_args(sp):
        sp.add_argument("input", help="edge list (TSV) or CSV matrix; '-' reads stdin")
        sp.add_argument("--input-format", choices=("auto", "edges", "matrix"), default="auto")
        sp.add_argument("--n", type=int, default=None, help="vertex count of an edge list")
        sp.add_argument("--graph", action="store_true",
                        help="treat a CSV matrix as a symmetric adjacency matrix")
        sp.add_argument("--triangle", action="store_true",
                        help="use only the upper triangle of a CSV matrix")
        sp.add_argument("--out", default=None, help="output file (default stdout)")

    def run_args(sp):
        sp.add_argument("--model", choices=ScoreModel.KINDS, default=None)
        sp.add_argument("--mode", choices=MODES, default="sparse")
        sp.add_argument("--order", choices=ORDER_SOURCES, default=None,
                        help="vertex order source (default fiedler for graphs)")
        sp.add_argument("--order-file", default=None, help="1-based vertex order, one id per line")
        sp.add_argument("--refine", action="store_true")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--max-iters", type=int, default=10_000)
        sp.add_argument("--stall-window", type=int, default=20)
        sp.add_argument("--force-random-every", type=int, default=None)

    sp = sub.add_parser("bands", help="full pipeline, writes a JSON report")
    input_args(sp)
    run_args(sp)
    sp.add_argument("--k", type=int, required=True, help="number of bands")
    sp.add_argument("--plot-data", default=None, help="also write boundary polylines as TSV")
    sp.add_argument("--restarts", type=int, default=1, help="seeds seed..seed+R-1, best kept")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes for restarts")
    sp.set_defaults(func=cmd_bands)

    sp = sub.add_parser("borders", help="border chain only")
    input_args(sp)
    run_args(sp)
    sp.set_defaults(func=cmd_borders)

    sp = sub.add_parser("order", help="spectral vertex order")
    input_args(sp)
    sp.set_defaults(func=cmd_order)

    sp = sub.add_parser("score", help="recompute the scores of a report")
    input_args(sp)
    sp.add_argument("--report", required=True)
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("synth", help="planted banded graph as an edge list")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--widths", type=_int_list, required=True, help="comma separated band widths")
    sp.add_argument("--probs", type=_float_list, required=True, help="comma separated probabilities")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--shuffle", action="store_true", help="hide the planted order")
    sp.add_argument("--truth-out", default=None, help="write the planted order here")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (bio.ParseError, OSError) as exc:
        print(f"bandseg: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PipelineError as exc:
        print(f"bandseg: {exc}", file=sys.stderr)
        return EXIT_PARSE if exc.stage == "input" else EXIT_ERROR
    except (BandsegError, ValueError) as exc:
        print(f"bandseg: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
