"""Mach -> drag-coefficient tables with natural cubic-spline interpolation."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .errors import DragTableFormatError, InsufficientKnotsError

__all__ = [
    "DragTable",
    "load_drag_table",
    "bundled_table",
    "cd",
    "natural_spline_second_derivatives",
    "spline_eval",
    "SHELL_FAMILIES",
    "data_dir",
]

SHELL_FAMILIES = ("G1", "G2", "G5", "G6", "G7", "G8")
DATA_ENV = "RICHLAB_DATA_DIR"


def data_dir() -> Path:
    """Directory holding the drag tables; ``$RICHLAB_DATA_DIR`` overrides."""
    env = os.environ.get(DATA_ENV)
    if env:
        return Path(env)
    return Path(__file__).resolve().parent / "data"


def natural_spline_second_derivatives(x, y):
    """Second derivatives at the knots of the natural cubic spline through (x, y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    m2 = np.zeros(n)
    if n < 3:
        return m2
    h = np.diff(x)
    # tridiagonal system for interior second derivatives (Thomas algorithm)
    diag = 2.0 * (h[:-1] + h[1:])
    upper = h[1:-1].copy()
    rhs = 6.0 * ((y[2:] - y[1:-1]) / h[1:] - (y[1:-1] - y[:-2]) / h[:-1])
    k = diag.size
    cp = np.zeros(k)
    dp = np.zeros(k)
    cp[0] = upper[0] / diag[0] if k > 1 else 0.0
    dp[0] = rhs[0] / diag[0]
    for i in range(1, k):
        denom = diag[i] - h[i] * cp[i - 1]
        cp[i] = upper[i] / denom if i < k - 1 else 0.0
        dp[i] = (rhs[i] - h[i] * dp[i - 1]) / denom
    sol = np.zeros(k)
    sol[-1] = dp[-1]
    for i in range(k - 2, -1, -1):
        sol[i] = dp[i] - cp[i] * sol[i + 1]
    m2[1:-1] = sol
    return m2


@njit(cache=True)
def spline_eval(x, y, m2, xq):
    """Evaluate the spline at ``xq``; constant extension outside the knots."""
    n = x.shape[0]
    if xq <= x[0]:
        return y[0]
    if xq >= x[n - 1]:
        return y[n - 1]
    i = np.searchsorted(x, xq, side="right") - 1
    h = x[i + 1] - x[i]
    b = (xq - x[i]) / h
    a = 1.0 - b
    return a * y[i] + b * y[i + 1] + ((a * a * a - a) * m2[i] + (b * b * b - b) * m2[i + 1]) * (h * h) / 6.0


@dataclass(frozen=True, eq=False)
class DragTable:
    """Drag-coefficient table for one shell family.

    Attributes
    ----------
    family : str
    mach, cd_values : ndarray
        Knots, Mach strictly increasing.
    m2 : ndarray
        Spline second derivatives at the knots (zero at both ends).
    """

    family: str
    mach: np.ndarray
    cd_values: np.ndarray
    m2: np.ndarray

    @classmethod
    def from_knots(cls, family, mach, cd_values):
        mach = np.array(mach, dtype=np.float64)
        cd_values = np.array(cd_values, dtype=np.float64)
        if mach.size < 4:
            raise InsufficientKnotsError(f"need at least 4 knots, got {mach.size}")
        if mach.shape != cd_values.shape:
            raise DragTableFormatError("mach and cd columns differ in length")
        bad = np.nonzero(np.diff(mach) <= 0)[0]
        if bad.size:
            raise DragTableFormatError(f"mach not strictly increasing at knot {bad[0] + 1}")
        m2 = natural_spline_second_derivatives(mach, cd_values)
        for arr in (mach, cd_values, m2):
            arr.setflags(write=False)
        return cls(str(family), mach, cd_values, m2)

    @property
    def knots(self):
        return list(zip(self.mach.tolist(), self.cd_values.tolist()))

    def __len__(self):
        return self.mach.size

    def __call__(self, mach):
        return cd(self, mach)

    def __repr__(self):
        return f"DragTable({self.family!r}, {len(self)} knots)"


def cd(table: DragTable, mach: float) -> float:
    """Drag coefficient at ``mach`` (endpoint value outside the table)."""
    return float(spline_eval(table.mach, table.cd_values, table.m2, float(mach)))


def _parse_number(token, lineno):
    token = token.strip()
    try:
        value = float(token)
    except ValueError:
        raise DragTableFormatError(f"not a number: {token!r}", lineno) from None
    if not math.isfinite(value):
        raise DragTableFormatError(f"non-finite value {token!r}", lineno)
    return value


def load_drag_table(source, family=None) -> DragTable:
    """Parse a drag-table CSV (path or text stream).

    The format is ``#`` comment lines, an optional ``mach,cd`` header and rows
    of two decimal numbers.
    """
    if isinstance(source, (str, os.PathLike)):
        path = Path(source)
        if family is None:
            family = path.stem
        with open(path, encoding="utf-8", newline="") as fh:
            return _parse(fh, family)
    return _parse(source, family or "custom")


def _parse(stream, family):
    mach, cdv = [], []
    last = None
    for lineno, line in enumerate(stream, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        row = next(csv.reader(io.StringIO(text)))
        if [c.strip().lower() for c in row] == ["mach", "cd"]:
            continue
        if len(row) != 2:
            raise DragTableFormatError(f"expected 2 columns, got {len(row)}", lineno)
        m = _parse_number(row[0], lineno)
        c = _parse_number(row[1], lineno)
        if m < 0:
            raise DragTableFormatError(f"negative Mach number {m}", lineno)
        if c <= 0:
            raise DragTableFormatError(f"drag coefficient must be positive, got {c}", lineno)
        if last is not None and m <= last:
            raise DragTableFormatError(f"Mach {m} does not increase (previous {last})", lineno)
        last = m
        mach.append(m)
        cdv.append(c)
    if len(mach) < 4:
        raise InsufficientKnotsError(f"need at least 4 rows, got {len(mach)}")
    return DragTable.from_knots(family, mach, cdv)


_CACHE: dict = {}


def bundled_table(family: str) -> DragTable:
    """Load ``<family>.csv`` from :func:`data_dir` (cached per path)."""
    family = family.upper()
    path = data_dir() / f"{family}.csv"
    key = str(path)
    if key not in _CACHE:
        _CACHE[key] = load_drag_table(path, family)
    return _CACHE[key]
