"""Fixed-step explicit Runge-Kutta methods of orders 1 to 4."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegrationBlowupError, InvalidInputError

__all__ = ["RKMethod", "METHODS", "get_method", "rk_step", "integrate_fixed"]


@dataclass(frozen=True, eq=False)
class RKMethod:
    """Butcher tableau of an explicit Runge-Kutta method.

    Attributes
    ----------
    name : str
    order : int
    a : ndarray, shape (s, s)
        Strictly lower-triangular stage coefficients.
    b : ndarray, shape (s,)
        Weights.
    c : ndarray, shape (s,)
        Nodes.
    """

    name: str
    order: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        for attr in ("a", "b", "c"):
            arr = np.array(getattr(self, attr), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        s = self.stages
        if self.a.shape != (s, s) or self.c.shape != (s,):
            raise InvalidInputError("inconsistent tableau shapes")
        if np.any(np.triu(self.a) != 0):
            raise InvalidInputError("tableau must be strictly lower triangular")

    @property
    def stages(self):
        return self.b.shape[0]

    def __repr__(self):
        return f"RKMethod({self.name!r}, order={self.order})"


METHODS = {
    "rk1": RKMethod("rk1", 1, [[0.0]], [1.0], [0.0]),
    # Heun: explicit trapezoidal rule
    "rk2": RKMethod("rk2", 2, [[0.0, 0.0], [1.0, 0.0]], [0.5, 0.5], [0.0, 1.0]),
    # Kutta's third-order rule
    "rk3": RKMethod(
        "rk3", 3,
        [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [-1.0, 2.0, 0.0]],
        [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        [0.0, 0.5, 1.0],
    ),
    "rk4": RKMethod(
        "rk4", 4,
        [[0.0, 0.0, 0.0, 0.0], [0.5, 0.0, 0.0, 0.0], [0.0, 0.5, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
        [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
        [0.0, 0.5, 0.5, 1.0],
    ),
}


def get_method(method) -> RKMethod:
    if isinstance(method, RKMethod):
        return method
    try:
        return METHODS[str(method).lower()]
    except KeyError:
        raise InvalidInputError(f"unknown method {method!r}; choose from {sorted(METHODS)}") from None


def rk_step(method, F, t, y, h):
    """One explicit RK step of size ``h`` for ``y' = F(t, y)``.

    ``y`` is not modified. Raises IntegrationBlowupError if any stage
    derivative is non-finite.
    """
    m = get_method(method)
    if not h > 0:
        raise InvalidInputError(f"step size must be positive, got {h!r}")
    y = np.asarray(y, dtype=np.float64)
    ks = []
    for i in range(m.stages):
        yi = y
        for j in range(i):
            if m.a[i, j] != 0.0:
                yi = yi + (h * m.a[i, j]) * ks[j]
        ki = np.asarray(F(t + m.c[i] * h, yi), dtype=np.float64)
        if not np.all(np.isfinite(ki)):
            raise IntegrationBlowupError(t, i)
        ks.append(ki)
    out = y
    for bi, ki in zip(m.b, ks):
        out = out + (h * bi) * ki
    return out


def integrate_fixed(method, F, t0, y0, h, n_steps, store=True):
    """Take ``n_steps`` uniform steps from ``(t0, y0)``.

    Times are computed as ``t0 + n*h`` rather than accumulated. Returns the
    list of ``(t, y)`` pairs including the initial point, or only the final
    pair when ``store`` is False.
    """
    n_steps = int(n_steps)
    if n_steps < 0:
        raise InvalidInputError("n_steps must be nonnegative")
    m = get_method(method)
    y = np.array(y0, dtype=np.float64)
    traj = [(float(t0), y.copy())]
    for n in range(n_steps):
        y = rk_step(m, F, t0 + n * h, y, h)
        if store:
            traj.append((t0 + (n + 1) * h, y))
    if not store:
        return [(t0 + n_steps * h, y)]
    return traj
