"""Bisection and golden-section search on an interval."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

from .errors import EvaluationError, InvalidInputError, NoBracketError, NonConvergenceError

__all__ = ["Bracket", "bisect", "golden_max", "GOLDEN", "UNIT_ROUNDOFF"]

UNIT_ROUNDOFF = 2.0**-53
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class Bracket(NamedTuple):
    lo: float
    hi: float

    def validate(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise InvalidInputError(f"invalid bracket [{self.lo}, {self.hi}]")
        return self


def bisect(g: Callable[[float], float], bracket, tol_abs: float, max_iter: int = 200) -> float:
    """Root of ``g`` in ``bracket`` by bisection.

    Halves the bracket until its width is at most ``2*tol_abs`` and returns the
    midpoint, so the returned point is within ``tol_abs`` of a sign change.
    An exact zero hit along the way is returned as is.
    Stops early if the bracket can no longer be split in floating point.

    Raises
    ------
    NoBracketError
        If ``g(lo)`` and ``g(hi)`` have the same strict sign.
    NonConvergenceError
        If ``max_iter`` halvings do not reach the tolerance.
    """
    lo, hi = Bracket(*bracket).validate()
    if not tol_abs > 0:
        raise InvalidInputError("tol_abs must be positive")
    glo, ghi = g(lo), g(hi)
    if glo * ghi > 0:
        raise NoBracketError(f"g({lo})={glo} and g({hi})={ghi} have the same sign")
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    it = 0
    while hi - lo > 2.0 * tol_abs:
        if it >= max_iter:
            raise NonConvergenceError(f"bisection did not converge in {max_iter} iterations")
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = g(mid)
        if gm == 0.0:
            return mid
        if glo * gm < 0:
            hi, ghi = mid, gm
        else:
            lo, glo = mid, gm
        it += 1
    return 0.5 * (lo + hi)


def _eval(phi, x):
    v = phi(x)
    if not math.isfinite(v):
        raise EvaluationError(f"objective is non-finite at {x!r}: {v!r}")
    return v


def golden_max(phi: Callable[[float], float], bracket, tol_rel: float = UNIT_ROUNDOFF, max_iter: int = 500):
    """Maximize a unimodal ``phi`` on ``bracket`` by golden-section search.

    The bracket shrinks by ``GOLDEN`` per iteration, with exactly one new
    evaluation per iteration, until its width is at most ``tol_rel`` times the
    initial width (or cannot shrink any further in floating point). Ties
    discard the upper part of the bracket.

    Returns
    -------
    (arg, value)
        Midpoint of the final bracket and ``phi`` evaluated there.
    """
    a, b = Bracket(*bracket).validate()
    if not tol_rel > 0:
        raise InvalidInputError("tol_rel must be positive")
    stop = tol_rel * (b - a)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = _eval(phi, c), _eval(phi, d)
    for _ in range(max_iter):
        if b - a <= stop:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            if not a < c < d:
                break
            fc = _eval(phi, c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            if not c < d < b:
                break
            fd = _eval(phi, d)
    else:
        raise NonConvergenceError(f"golden-section search did not converge in {max_iter} iterations")
    x = 0.5 * (a + b)
    return x, _eval(phi, x)
