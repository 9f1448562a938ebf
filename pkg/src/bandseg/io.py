"""Reading graphs and matrices, writing reports and plot data.

Edge lists are tab-separated ``u  v  [weight]`` lines with 1-based vertex
ids; blank lines and lines starting with ``#`` are skipped.  Matrices are CSV
files of reals with an optional header row.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .core import BandsegError
from .graph import Graph

SCHEMA_VERSION = 1


class ParseError(BandsegError, ValueError):
    """Malformed input; ``line`` is the 1-based line number (if known)."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line


def _open_text(src):
    if isinstance(src, (str, Path)):
        return open(src, "r", encoding="utf-8", newline=""), str(src)
    return src, getattr(src, "name", None)


def read_edge_list(src, n: int | None = None) -> Graph:
    """Parse an edge list into a :class:`Graph` (vertex ``k`` becomes ``k - 1``).

    Args:
      src: path or text stream.
      n: number of vertices; defaults to the largest id seen.
    """
    fh, name = _open_text(src)
    us, vs, ws = [], [], []
    seen = {}
    try:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split("\t") if "\t" in text else text.split()
            if len(parts) not in (2, 3):
                raise ParseError(f"expected 2 or 3 fields, got {len(parts)}", lineno, name)
            try:
                u, v = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise ParseError(f"cannot parse {text!r}", lineno, name) from None
            if u < 1 or v < 1:
                raise ParseError("vertex ids are 1-based", lineno, name)
            if n is not None and max(u, v) > n:
                raise ParseError(f"vertex id exceeds vertex count {n}", lineno, name)
            if u == v:
                raise ParseError("self-loops are not allowed", lineno, name)
            if not math.isfinite(w) or w < 0:
                raise ParseError("weights must be finite and non-negative", lineno, name)
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ParseError(f"duplicate edge {key[0]}-{key[1]} (first on line {seen[key]})",
                                 lineno, name)
            seen[key] = lineno
            us.append(u - 1)
            vs.append(v - 1)
            ws.append(w)
    finally:
        if isinstance(src, (str, Path)):
            fh.close()
    n_vert = n if n is not None else (max(max(us), max(vs)) + 1 if us else 0)
    return Graph(n_vert, us, vs, ws)


def write_edge_list(graph: Graph, dst, weights: bool | None = None) -> None:
    """Write a graph as a 1-based edge list (weights only if not all 1)."""
    if weights is None:
        weights = graph.is_weighted
    lines = []
    for u, v, w in zip(graph.u, graph.v, graph.w):
        if weights:
            lines.append(f"{u + 1}\t{v + 1}\t{float(w)!r}")
        else:
            lines.append(f"{u + 1}\t{v + 1}")
    text = "\n".join(lines) + ("\n" if lines else "")
    _write_text(dst, text)


def read_dense_matrix(src) -> np.ndarray:
    """Parse a CSV matrix; a first row that is not numeric is taken as a header."""
    fh, name = _open_text(src)
    rows = []
    width = None
    try:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                vals = [float(c) for c in rec]
            except ValueError:
                if lineno == 1 and not rows:
                    continue
                raise ParseError(f"non-numeric value in {rec!r}", lineno, name) from None
            if not all(math.isfinite(x) for x in vals):
                raise ParseError("values must be finite", lineno, name)
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ParseError(f"expected {width} columns, got {len(vals)}", lineno, name)
            rows.append(vals)
    finally:
        if isinstance(src, (str, Path)):
            fh.close()
    if not rows:
        raise ParseError("no data rows", None, name)
    return np.array(rows, dtype=float)


def write_dense_matrix(a: np.ndarray, dst) -> None:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(a, dtype=float):
        w.writerow([repr(float(x)) for x in row])
    _write_text(dst, buf.getvalue())


def _write_text(dst, text: str) -> None:
    if isinstance(dst, (str, Path)):
        Path(dst).write_text(text, encoding="utf-8")
    else:
        dst.write(text)


def report_to_json(report) -> str:
    """Deterministic JSON text of a report (keys sorted, floats round-trip)."""
    return json.dumps(report.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def write_report_json(report, dst) -> None:
    _write_text(dst, report_to_json(report))


def read_report_json(src):
    """Load a report written by :func:`write_report_json`."""
    from .pipeline import BandReport

    if isinstance(src, (str, Path)):
        text = Path(src).read_text(encoding="utf-8")
    else:
        text = src.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported report schema version {version!r}")
    return BandReport.from_dict(data)


def plot_rows(report) -> list[tuple[int, int, int]]:
    """(boundary, row, end) triples of every boundary polyline vertex."""
    out = []
    for k, poly in enumerate(report.boundaries):
        for row, end in poly:
            out.append((k, int(row), int(end)))
    return out


def write_plot_data(report, dst) -> None:
    """Tab-separated polyline vertices, ready for external plotting.

    Columns: boundary index (0 is the base), 1-based row position and the
    1-based last column of the corner in that row.
    """
    lines = ["boundary\trow\tend"]
    lines += [f"{k}\t{r}\t{e}" for k, r, e in plot_rows(report)]
    _write_text(dst, "\n".join(lines) + "\n")


__all__ = [
    "ParseError", "read_edge_list", "write_edge_list", "read_dense_matrix", "write_dense_matrix",
    "write_report_json", "read_report_json", "report_to_json", "write_plot_data", "plot_rows",
    "SCHEMA_VERSION",
]
