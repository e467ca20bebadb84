"""Trace CSV and run-manifest reading and writing.

Traces have the fixed header ``t,wall_time,...,mu`` and every float is
written with 17 significant digits, so a written trace reads back exactly.
Manifests are plain ``key=value`` lines.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable

from .solver import TRACE_FIELDS, TraceRecord

__all__ = [
    "TRACE_HEADER",
    "format_float",
    "format_trace",
    "write_trace",
    "read_trace",
    "write_manifest",
    "read_manifest",
]

TRACE_HEADER = ",".join(TRACE_FIELDS)


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _row(rec: TraceRecord) -> str:
    vals = rec.as_tuple()
    return ",".join([str(int(vals[0]))] + [format_float(v) for v in vals[1:]])


def format_trace(records: Iterable[TraceRecord]) -> str:
    buf = io.StringIO()
    buf.write(TRACE_HEADER + "\n")
    for rec in records:
        buf.write(_row(rec) + "\n")
    return buf.getvalue()


def write_trace(path, records: Iterable[TraceRecord]) -> None:
    # built in memory and written once so the iteration loop never waits on I/O
    Path(path).write_text(format_trace(records))


def read_trace(path) -> list[TraceRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_FIELDS:
            raise ValueError(f"{path}: expected header {TRACE_HEADER!r}, got {header!r}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(TRACE_FIELDS):
                raise ValueError(f"{path}:{lineno}: expected {len(TRACE_FIELDS)} fields, got {len(row)}")
            out.append(TraceRecord(int(row[0]), *(float(v) for v in row[1:])))
    return out


def write_manifest(path, entries: dict) -> None:
    lines = []
    for key, value in entries.items():
        if "=" in key or "\n" in key:
            raise ValueError(f"bad manifest key {key!r}")
        if isinstance(value, float):
            text = format_float(value)
        elif value is None:
            text = ""
        else:
            text = str(value)
        if "\n" in text:
            raise ValueError(f"manifest value for {key!r} spans lines")
        lines.append(f"{key}={text}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
