"""Per-pass convergence traces and their CSV encoding."""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError

__all__ = ["TracePoint", "Trace", "CSV_HEADER", "write_csv", "read_csv", "format_float"]

CSV_HEADER = "pass,primal,dual,gap,elapsed_s,param_estimate,event"
_FIELDS = CSV_HEADER.split(",")


@dataclass(frozen=True)
class TracePoint:
    pass_: int
    primal: float
    dual: float | None = None
    gap: float | None = None
    elapsed_s: float | None = None
    param_estimate: float | None = None
    event: str | None = None


@dataclass
class Trace:
    """Solver output: trace points plus the final iterates."""

    algo: str
    points: list = field(default_factory=list)
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def append(self, point):
        if self.points and point.pass_ <= self.points[-1].pass_:
            raise ValueError("trace passes must be strictly increasing")
        self.points.append(point)

    @property
    def passes(self):
        return np.array([p.pass_ for p in self.points])

    @property
    def gaps(self):
        return np.array([np.nan if p.gap is None else p.gap for p in self.points])

    @property
    def primals(self):
        return np.array([p.primal for p in self.points])

    @property
    def final(self):
        return self.points[-1]

    def events(self):
        return [(p.pass_, p.event) for p in self.points if p.event]


def format_float(v):
    if v is None:
        return ""
    return repr(float(v))


def write_csv(trace, stream, timing=True):
    """Write ``trace`` to a text stream. ``timing=False`` blanks ``elapsed_s``."""
    stream.write(CSV_HEADER + "\n")
    for p in trace.points:
        row = [
            str(int(p.pass_)),
            format_float(p.primal),
            format_float(p.dual),
            format_float(p.gap),
            format_float(p.elapsed_s) if timing else "",
            format_float(p.param_estimate),
            p.event or "",
        ]
        stream.write(",".join(row) + "\n")


def to_csv_string(trace, timing=True):
    buf = io.StringIO()
    write_csv(trace, buf, timing=timing)
    return buf.getvalue()


def _opt_float(text, lineno, name):
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"non-numeric {name} field {text!r}", lineno) from None


def read_csv(stream, algo="trace"):
    """Parse a trace CSV; raises ``ParseError`` on malformed content."""
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty trace file", 1) from None
    if header != _FIELDS:
        raise ParseError(f"unexpected header {','.join(header)!r}", 1)
    trace = Trace(algo=algo)
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(_FIELDS):
            raise ParseError(f"expected {len(_FIELDS)} fields, got {len(row)}", lineno)
        try:
            pass_ = int(row[0])
        except ValueError:
            raise ParseError(f"non-integer pass {row[0]!r}", lineno) from None
        primal = _opt_float(row[1], lineno, "primal")
        if primal is None:
            raise ParseError("primal value missing", lineno)
        dual = _opt_float(row[2], lineno, "dual")
        gap = _opt_float(row[3], lineno, "gap")
        if dual is not None and gap is not None and math.isfinite(gap):
            if not math.isclose(gap, primal - dual, rel_tol=1e-9, abs_tol=1e-12):
                raise ParseError("gap does not equal primal - dual", lineno)
        point = TracePoint(
            pass_=pass_,
            primal=primal,
            dual=dual,
            gap=gap,
            elapsed_s=_opt_float(row[4], lineno, "elapsed_s"),
            param_estimate=_opt_float(row[5], lineno, "param_estimate"),
            event=row[6] or None,
        )
        try:
            trace.append(point)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    if not trace.points:
        raise ParseError("trace has no data rows", 2)
    return trace
