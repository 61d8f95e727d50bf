"""Composite trapezoidal rule and step-halving sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInputError
from .extrapolation import SampleSweep

__all__ = ["Integrand", "trapezoid", "refinement_sweep", "INTEGRANDS"]

_CHUNK = 1 << 20


@dataclass(frozen=True)
class Integrand:
    """A definite integral of ``f`` over ``[a, b]``.

    ``f`` must accept a numpy array and return an array of the same shape.
    """

    f: Callable
    a: float
    b: float
    t_true: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise InvalidInputError(f"need finite a < b, got [{self.a}, {self.b}]")


def trapezoid(integrand: Integrand, n: int) -> float:
    """Composite trapezoidal sum with ``n`` equal subintervals.

    The pair terms ``f(x_j) + f(x_{j+1})`` are accumulated strictly left to
    right (no pairwise or compensated summation) so results are reproducible
    down to the rounding pattern.
    """
    n = int(n)
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    a, b = float(integrand.a), float(integrand.b)
    h = (b - a) / n
    total = 0.0
    prev = None
    for start in range(0, n + 1, _CHUNK):
        stop = min(start + _CHUNK, n + 1)
        x = a + np.arange(start, stop, dtype=np.float64) * h
        fx = np.asarray(integrand.f(x), dtype=np.float64)
        if prev is not None:
            fx = np.concatenate(([prev], fx))
        pairs = fx[:-1] + fx[1:]
        if pairs.size:
            total = float(np.add.accumulate(np.concatenate(([total], pairs)))[-1])
        prev = fx[-1]
    return 0.5 * h * total


def refinement_sweep(integrand: Integrand, k_max: int, label: Optional[str] = None) -> SampleSweep:
    """Trapezoid values for ``n = 2**k`` subintervals, ``k = 0..k_max``."""
    k_max = int(k_max)
    if k_max < 2:
        raise InvalidInputError(f"k_max must be >= 2, got {k_max}")
    entries = tuple((k, trapezoid(integrand, 1 << k)) for k in range(k_max + 1))
    if label is None:
        label = f"trapezoid {integrand.name or 'f'} on [{integrand.a}, {integrand.b}]"
    return SampleSweep(float(integrand.b - integrand.a), entries, label)


INTEGRANDS = {
    "exp": Integrand(np.exp, 0.0, 1.0, math.e - 1.0, "exp"),
    "sqrt": Integrand(np.sqrt, 0.0, 1.0, 2.0 / 3.0, "sqrt"),
}
