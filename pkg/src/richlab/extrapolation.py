"""Richardson error estimates, Richardson's fraction and order diagnosis.

A method ``A_h`` whose error obeys ``T - A_h = alpha*h**p + beta*h**q + O(h**r)``
produces fractions ``F_h = (A_2h - A_4h) / (A_h - A_2h)`` that tend to ``2**p``,
and ``log2|F_h - 2**p|`` is linear in ``log2 h`` with slope ``m = q - p``.
This module turns a sweep of approximations at halving step sizes into those
quantities and decides whether the data look like they live in the
asymptotic range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from statistics import median
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DegenerateFractionError, InvalidInputError

__all__ = [
    "SampleSweep",
    "Fraction",
    "Estimate",
    "Verdict",
    "ConvergenceDiagnosis",
    "richardson_estimate",
    "richardson_fraction",
    "fraction_series",
    "diagnose",
    "validate_estimates",
    "sweep_from_values",
    "MIN_WINDOW",
    "SLOPE_RANGE",
    "MAX_RMS",
]

# Window detector thresholds (log2 units).
MIN_WINDOW = 4
SLOPE_RANGE = (0.1, 6.0)
MAX_RMS = 0.5


class Verdict(str, Enum):
    ASYMPTOTIC_RANGE_FOUND = "ASYMPTOTIC_RANGE_FOUND"
    NO_EXPANSION_EVIDENCE = "NO_EXPANSION_EVIDENCE"
    INSUFFICIENT_DATA = "INSUFFICIENT_DATA"

    def __str__(self):
        return self.value


class Fraction(NamedTuple):
    k: int
    value: float  # nan when degenerate
    degenerate: bool = False


class Estimate(NamedTuple):
    k: int
    value: float


@dataclass(frozen=True)
class SampleSweep:
    """Approximations ``A`` computed with step sizes ``h_k = h0 * 2**-k``.

    Parameters
    ----------
    h0 : float
        Base step size, in problem units.
    entries : sequence of (k, A)
        Level index and approximation, strictly increasing in ``k``.
    label : str
        Free-text description of the target value.
    """

    h0: float
    entries: tuple = ()
    label: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.h0) and self.h0 > 0):
            raise InvalidInputError(f"h0 must be positive and finite, got {self.h0!r}")
        entries = tuple((int(k), float(a)) for k, a in self.entries)
        ks = [k for k, _ in entries]
        if any(k < 0 for k in ks):
            raise InvalidInputError("level indices must be nonnegative")
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise InvalidInputError("level indices must be strictly increasing")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    @property
    def ks(self):
        return [k for k, _ in self.entries]

    @property
    def values(self):
        return [a for _, a in self.entries]

    def step(self, k):
        return math.ldexp(self.h0, -k)

    @property
    def steps(self):
        return [self.step(k) for k in self.ks]

    def as_dict(self):
        return dict(self.entries)


@dataclass(frozen=True)
class ConvergenceDiagnosis:
    fractions: list
    p_hat: float
    m_hat: float
    asymptotic_window: Optional[tuple]
    estimates: list
    verdict: Verdict
    p_reference: float = float("nan")
    fit_rms: float = float("nan")
    degenerate: tuple = field(default=())

    def fraction_map(self):
        return {f.k: f.value for f in self.fractions}

    def estimate_map(self):
        return {e.k: e.value for e in self.estimates}

    def window_ks(self):
        if self.asymptotic_window is None:
            return []
        lo, hi = self.asymptotic_window
        return list(range(lo, hi + 1))

    def summary(self):
        """One-line, machine-readable verdict record."""
        if self.asymptotic_window is None:
            window = "none"
        else:
            window = f"{self.asymptotic_window[0]}..{self.asymptotic_window[1]}"
        return (
            f"verdict={self.verdict.value} p_hat={_fmt(self.p_hat)} "
            f"m_hat={_fmt(self.m_hat)} window={window}"
        )


def _fmt(x):
    return "nan" if not math.isfinite(x) else repr(float(x))


def _check_finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise InvalidInputError(f"non-finite input {v!r}")


def richardson_estimate(a_h: float, a_2h: float, p: float) -> float:
    """Richardson's estimate ``(A_h - A_2h) / (2**p - 1)`` of the error ``T - A_h``."""
    _check_finite(a_h, a_2h, p)
    if p <= 0:
        raise InvalidInputError(f"order p must be positive, got {p!r}")
    return (a_h - a_2h) / (2.0**p - 1.0)


def richardson_fraction(a_h: float, a_2h: float, a_4h: float) -> float:
    """Richardson's fraction ``(A_2h - A_4h) / (A_h - A_2h)``.

    Raises
    ------
    DegenerateFractionError
        If ``A_h == A_2h``.
    """
    _check_finite(a_h, a_2h, a_4h)
    den = a_h - a_2h
    if den == 0.0:
        raise DegenerateFractionError("A_h equals A_2h")
    return (a_2h - a_4h) / den


def fraction_series(sweep: SampleSweep) -> list:
    """Fractions for every ``k`` whose levels ``k-1`` and ``k-2`` are present.

    Degenerate entries are kept with ``value=nan`` and ``degenerate=True``.
    Returns an empty list when the sweep has fewer than three entries.
    """
    if len(sweep) < 3:
        return []
    a = sweep.as_dict()
    out = []
    for k in sweep.ks:
        if k - 1 in a and k - 2 in a:
            try:
                f = richardson_fraction(a[k], a[k - 1], a[k - 2])
            except (DegenerateFractionError, InvalidInputError):
                out.append(Fraction(k, float("nan"), True))
            else:
                out.append(Fraction(k, f, False))
    return out


def _linfit(x, y):
    """Least-squares line; returns (slope, rms residual)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    slope = float(np.dot(dx, y - ym) / np.dot(dx, dx))
    resid = y - (ym + slope * dx)
    return slope, float(np.sqrt(np.mean(resid * resid)))


def _runs(fractions):
    """Maximal runs of consecutive k with usable (finite, positive) fractions."""
    runs, cur = [], []
    for f in fractions:
        ok = (not f.degenerate) and math.isfinite(f.value) and f.value > 0
        if ok and cur and f.k == cur[-1].k + 1:
            cur.append(f)
        elif ok:
            if cur:
                runs.append(cur)
            cur = [f]
        else:
            if cur:
                runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    return runs


def _best_window(fractions, p_ref, min_window=MIN_WINDOW, slope_range=SLOPE_RANGE, max_rms=MAX_RMS):
    """Longest admissible window for a fixed reference order.

    Returns ``(length, -rms, -k_lo, window, slope, rms)`` or None; the leading
    triple is the ranking key (longer, then better fit, then earlier).
    """
    target = 2.0**p_ref
    best = None
    for run in _runs(fractions):
        ks = [f.k for f in run]
        dev = [abs(f.value - target) for f in run]
        n = len(run)
        for i in range(n):
            for j in range(i + min_window, n + 1):
                seg = dev[i:j]
                if min(seg) == 0.0:
                    break
                ys = [-math.log2(d) for d in seg]
                slope, rms = _linfit(ks[i:j], ys)
                if not (slope_range[0] < slope <= slope_range[1] and rms < max_rms):
                    continue
                vals = [f.value for f in run[i:j]]
                # the window must actually sit near the reference order
                if abs(math.log2(median(vals)) - p_ref) > 0.125:
                    continue
                cand = (j - i, -rms, -ks[i], (ks[i], ks[j - 1]), slope, rms)
                if best is None or cand[:3] > best[:3]:
                    best = cand
    return best


def _quarter(x):
    return math.floor(4.0 * x + 0.5) / 4.0


def _reference_candidates(fractions):
    vals = [f.value for f in fractions if not f.degenerate and f.value > 1.0]
    return sorted({_quarter(math.log2(v)) for v in vals if math.isfinite(v)})


def diagnose(sweep: SampleSweep, p_nominal: Optional[float] = None, *, min_window: int = MIN_WINDOW,
             slope_range=SLOPE_RANGE, max_rms: float = MAX_RMS) -> ConvergenceDiagnosis:
    """Diagnose the empirical order of convergence of a sweep.

    Every contiguous run of at least ``MIN_WINDOW`` usable fractions is fitted
    with a straight line ``k -> -log2|F_k - 2**p_ref|``; the longest run whose
    slope lies in ``SLOPE_RANGE`` with RMS residual below ``MAX_RMS`` and whose
    median fraction rounds to ``p_ref`` is the asymptotic window.

    Parameters
    ----------
    sweep : SampleSweep
    min_window, slope_range, max_rms
        Detector thresholds; the defaults are the module constants.
    p_nominal : float, optional
        Expected order. Used as the reference order for the window search and
        for the error estimates. Without it, every quarter-rounded
        ``log2 F`` observed in the sweep is tried as a reference and the one
        giving the best window wins.

    Returns
    -------
    ConvergenceDiagnosis
    """
    if p_nominal is not None:
        _check_finite(p_nominal)
        if p_nominal <= 0:
            raise InvalidInputError("p_nominal must be positive")

    fractions = fraction_series(sweep)
    degenerate = tuple(f.k for f in fractions if f.degenerate)
    nan = float("nan")
    if len(sweep) < 3 or not fractions:
        return ConvergenceDiagnosis(
            fractions, nan, nan, None, _estimates(sweep, p_nominal), Verdict.INSUFFICIENT_DATA,
            degenerate=degenerate,
        )

    if p_nominal is not None:
        refs = [float(p_nominal)]
    else:
        refs = _reference_candidates(fractions)

    best, best_ref = None, nan
    for ref in refs:
        cand = _best_window(fractions, ref, min_window, slope_range, max_rms)
        if cand is not None and (best is None or cand[:3] > best[:3]):
            best, best_ref = cand, ref

    if best is None:
        return ConvergenceDiagnosis(
            fractions, nan, nan, None, _estimates(sweep, p_nominal), Verdict.NO_EXPANSION_EVIDENCE,
            p_reference=best_ref if p_nominal is None else float(p_nominal),
            degenerate=degenerate,
        )

    _, _, _, window, slope, rms = best
    fmap = {f.k: f.value for f in fractions}
    in_window = [fmap[k] for k in range(window[0], window[1] + 1)]
    p_hat = math.log2(median(in_window))
    p_est = float(p_nominal) if p_nominal is not None else p_hat
    return ConvergenceDiagnosis(
        fractions, p_hat, slope, window, _estimates(sweep, p_est), Verdict.ASYMPTOTIC_RANGE_FOUND,
        p_reference=best_ref, fit_rms=rms, degenerate=degenerate,
    )


def _estimates(sweep, p):
    if p is None or not math.isfinite(p) or p <= 0:
        return []
    a = sweep.as_dict()
    return [
        Estimate(k, richardson_estimate(a[k], a[k - 1], p)) for k in sweep.ks if k - 1 in a
    ]


def validate_estimates(diagnosis: ConvergenceDiagnosis, sweep: SampleSweep, t_true: float) -> list:
    """Relative error of each Richardson estimate against the true error.

    Returns a list of ``(k, rel_err)``; entries whose true error is exactly
    zero are reported as ``nan``.
    """
    _check_finite(t_true)
    a = sweep.as_dict()
    out = []
    for k, r in diagnosis.estimates:
        err = t_true - a[k]
        if err == 0.0:
            out.append((k, float("nan")))
        else:
            out.append((k, abs(err - r) / abs(err)))
    return out


def sweep_from_values(values: Sequence[float], h0: float = 1.0, k0: int = 0, label: str = "") -> SampleSweep:
    """Convenience constructor for consecutive levels ``k0, k0+1, ...``."""
    return SampleSweep(h0, tuple((k0 + i, v) for i, v in enumerate(values)), label)
