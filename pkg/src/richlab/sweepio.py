"""CSV serialization of sample sweeps and diagnoses.

Sweep files have columns ``k,h,A``; diagnosis files ``k,h,A,F,R``. Both
allow ``#`` comment lines, use ``,`` separators, ``.`` decimals and LF line
endings. Floats are written with ``repr`` so a round trip is lossless.
"""

from __future__ import annotations

import csv
import io
import math
import os
from datetime import datetime, timezone
from pathlib import Path

from .errors import SweepFormatError
from .extrapolation import ConvergenceDiagnosis, SampleSweep, diagnose

__all__ = [
    "write_sweep",
    "read_sweep",
    "write_diagnosis",
    "analyze_file",
    "format_float",
    "write_table",
]

SWEEP_COLUMNS = ("k", "h", "A")
DIAG_COLUMNS = ("k", "h", "A", "F", "R")


def format_float(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _meta_lines(meta):
    if not meta:
        return []
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return [f"# generated: {stamp}"]


def _header(sweep, meta):
    lines = [f"# label: {sweep.label}", f"# h0: {sweep.h0!r}"]
    return lines + _meta_lines(meta)


def _write(path_or_stream, text):
    if hasattr(path_or_stream, "write"):
        path_or_stream.write(text)
        return
    with open(path_or_stream, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_sweep(sweep: SampleSweep, dest, meta: bool = True):
    """Write ``sweep`` as ``k,h,A`` CSV to a path or text stream."""
    lines = _header(sweep, meta)
    lines.append(",".join(SWEEP_COLUMNS))
    for k, a in sweep.entries:
        lines.append(f"{k},{sweep.step(k)!r},{a!r}")
    _write(dest, "\n".join(lines) + "\n")


def write_diagnosis(sweep: SampleSweep, diag: ConvergenceDiagnosis, dest, meta: bool = True):
    """Write ``k,h,A,F,R`` rows followed by a ``# verdict=...`` record line."""
    lines = _header(sweep, meta)
    lines.append(",".join(DIAG_COLUMNS))
    fr = diag.fraction_map()
    est = diag.estimate_map()
    for k, a in sweep.entries:
        lines.append(
            f"{k},{sweep.step(k)!r},{a!r},{format_float(fr.get(k))},{format_float(est.get(k))}"
        )
    lines.append("# " + diag.summary())
    _write(dest, "\n".join(lines) + "\n")


def write_table(columns, rows, dest, comments=(), meta: bool = True):
    """Write a plain CSV table; ints are written as is, floats with ``repr``."""
    lines = [f"# {c}" for c in comments] + _meta_lines(meta)
    lines.append(",".join(columns))
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (int, str)) and not isinstance(v, bool):
                cells.append(str(v))
            else:
                cells.append(format_float(v))
        lines.append(",".join(cells))
    _write(dest, "\n".join(lines) + "\n")


def _parse_float(token, lineno, name):
    try:
        value = float(token)
    except ValueError:
        raise SweepFormatError(f"column {name}: not a number: {token!r}", lineno) from None
    if not math.isfinite(value):
        raise SweepFormatError(f"column {name}: non-finite value {token!r}", lineno)
    return value


def read_sweep(source, column: str = "A") -> SampleSweep:
    """Parse a sweep CSV from a path or text stream.

    Accepts ``k,h,A[,F,R]`` files and step-count tables with an ``n`` column
    (such as the SHAKE energy tables), in which case ``k = log2(n / n_min)``
    and ``column`` selects the observable. The ``h`` column must halve from
    level to level.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(Path(source), encoding="utf-8", newline="") as fh:
            text = fh.read()
    else:
        text = source.read()
    label = ""
    h0_meta = None
    header = None
    rows = []
    for lineno, line in enumerate(io.StringIO(text), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s[1:].strip()
            if body.startswith("label:"):
                label = body[len("label:"):].strip()
            elif body.startswith("h0:"):
                h0_meta = _parse_float(body[3:].strip(), lineno, "h0")
            continue
        fields = next(csv.reader([s]))
        if header is None:
            header = [f.strip() for f in fields]
            continue
        if len(fields) != len(header):
            raise SweepFormatError(f"expected {len(header)} fields, got {len(fields)}", lineno)
        rows.append((lineno, dict(zip(header, (f.strip() for f in fields)))))
    if header is None:
        raise SweepFormatError("missing header line")

    if "k" in header:
        value_col = column if column in header else "A"
        if value_col not in header or "h" not in header:
            raise SweepFormatError(f"header must contain k, h and {column}; got {header}")
        parsed = []
        for lineno, r in rows:
            try:
                k = int(r["k"])
            except ValueError:
                raise SweepFormatError(f"column k: not an integer: {r['k']!r}", lineno) from None
            parsed.append((lineno, k, _parse_float(r["h"], lineno, "h"), _parse_float(r[value_col], lineno, value_col)))
    elif "n" in header and "h" in header:
        value_col = column if column != "A" else "kinetic"
        if value_col not in header:
            raise SweepFormatError(f"column {value_col!r} not in header {header}")
        tmp = []
        for lineno, r in rows:
            try:
                n = int(r["n"])
            except ValueError:
                raise SweepFormatError(f"column n: not an integer: {r['n']!r}", lineno) from None
            tmp.append((lineno, n, _parse_float(r["h"], lineno, "h"), _parse_float(r[value_col], lineno, value_col)))
        if not tmp:
            parsed = []
        else:
            n_min = min(t[1] for t in tmp)
            parsed = []
            for lineno, n, h, a in tmp:
                ratio = n / n_min
                k = int(round(math.log2(ratio)))
                if ratio != 2.0**k:
                    raise SweepFormatError(f"step count {n} is not a power-of-two multiple of {n_min}", lineno)
                parsed.append((lineno, k, h, a))
    else:
        raise SweepFormatError(f"unrecognised header {header}")

    if not parsed:
        raise SweepFormatError("no data rows")
    _, k_first, h_first, _ = parsed[0]
    h0 = h0_meta if h0_meta is not None else math.ldexp(h_first, k_first)
    prev = None
    for lineno, k, h, _ in parsed:
        if prev is not None and k <= prev:
            raise SweepFormatError("k must be strictly increasing", lineno)
        prev = k
        expect = math.ldexp(h0, -k)
        if abs(h - expect) > 1e-12 * expect:
            raise SweepFormatError(f"h={h!r} breaks the halving rule (expected {expect!r} for k={k})", lineno)
    return SampleSweep(h0, tuple((k, a) for _, k, _, a in parsed), label)


def analyze_file(path, p_nominal=None, column: str = "A") -> ConvergenceDiagnosis:
    """Read a sweep CSV and diagnose it."""
    return diagnose(read_sweep(path, column), p_nominal)
