"""Planar point-mass exterior ballistics with ground-impact event location.

A shell leaves the origin at elevation ``theta`` and is integrated with a
fixed-step explicit Runge-Kutta method. Every step has length ``h`` except
the last one, whose length ``s`` in ``[0, h]`` is found by bisection so the
shell lands on the ground. The hot loop is compiled with numba; it shares the
Butcher tableaus of :mod:`richlab.integrators` and the atmosphere and spline
kernels of :mod:`richlab.atmosphere` and :mod:`richlab.dragmodel`.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from numba import njit

from .atmosphere import G0, density_and_sound_speed
from .dragmodel import DragTable, bundled_table, spline_eval
from .errors import (
    EventLocationError,
    IntegrationBlowupError,
    InvalidInputError,
    NonTerminationError,
)
from .extrapolation import SampleSweep
from .integrators import get_method
from .solvers import UNIT_ROUNDOFF, golden_max

__all__ = [
    "ShellSpec",
    "LaunchSetup",
    "FlightResult",
    "d20_shell",
    "vacuum_table",
    "shell_ode",
    "fly",
    "range_function",
    "max_range",
    "maxrange_sweep",
    "D20_DIAMETER",
    "D20_MASS",
    "D20_MUZZLE_SPEED",
    "MAX_FLIGHT_TIME",
    "SWEEP_H0",
]

D20_DIAMETER = 0.1524
D20_MASS = 43.56
D20_MUZZLE_SPEED = 655.0
MAX_FLIGHT_TIME = 1.0e4
SWEEP_H0 = 8.0  # h_k = 2**(3 - k) seconds

_OK, _BLOWUP, _NO_BRACKET, _TOO_LONG = 0, 1, 2, 3


@dataclass(frozen=True)
class ShellSpec:
    mass: float
    diameter: float
    muzzle_speed: float
    drag: DragTable

    def __post_init__(self):
        for name in ("mass", "diameter", "muzzle_speed"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be positive, got {v!r}")

    @property
    def drag_factor(self):
        """``pi d^2 / (8 m)``: multiplies ``rho |v| Cd v`` to give the drag deceleration."""
        return math.pi * self.diameter**2 / (8.0 * self.mass)


@dataclass(frozen=True)
class LaunchSetup:
    theta: float
    h: float
    method: str = "rk1"
    event_tol: float = UNIT_ROUNDOFF

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi / 2):
            raise InvalidInputError(f"elevation must lie in [0, pi/2], got {self.theta!r}")
        if not (math.isfinite(self.h) and self.h > 0):
            raise InvalidInputError(f"time step must be positive, got {self.h!r}")
        if not (0.0 < self.event_tol < 1.0):
            raise InvalidInputError(f"event_tol must lie in (0, 1), got {self.event_tol!r}")
        get_method(self.method)


class FlightResult(NamedTuple):
    range: float
    impact_time: float
    trajectory: Optional[np.ndarray]  # rows (t, x, y, vx, vy)
    n_steps: int
    final_step: float


def d20_shell(family: str = "G7", mass=D20_MASS, diameter=D20_DIAMETER, muzzle_speed=D20_MUZZLE_SPEED) -> ShellSpec:
    """152 mm D-20 howitzer shell with the named bundled drag table."""
    return ShellSpec(mass, diameter, muzzle_speed, bundled_table(family))


def vacuum_table() -> DragTable:
    """A drag table that is identically zero."""
    return DragTable.from_knots("vacuum", [0.0, 1.0, 2.0, 3.0], [0.0, 0.0, 0.0, 0.0])


@njit(cache=True)
def _rhs(y, out, mach, cdv, m2, factor):
    vx = y[2]
    vy = y[3]
    speed = math.sqrt(vx * vx + vy * vy)
    rho, a = density_and_sound_speed(y[1])
    k = rho * speed * spline_eval(mach, cdv, m2, speed / a) * factor
    out[0] = vx
    out[1] = vy
    out[2] = -k * vx
    out[3] = -G0 - k * vy


@njit(cache=True)
def _step(y, h, A, B, kbuf, ytmp, out, mach, cdv, m2, factor):
    """One RK step into ``out``; returns the failing stage index or -1."""
    s = B.shape[0]
    for i in range(s):
        for q in range(4):
            ytmp[q] = y[q]
        for j in range(i):
            aij = A[i, j]
            if aij != 0.0:
                for q in range(4):
                    ytmp[q] = ytmp[q] + (h * aij) * kbuf[j, q]
        _rhs(ytmp, kbuf[i], mach, cdv, m2, factor)
        for q in range(4):
            if not math.isfinite(kbuf[i, q]):
                return i
    for q in range(4):
        out[q] = y[q]
    for i in range(s):
        for q in range(4):
            out[q] = out[q] + (h * B[i]) * kbuf[i, q]
    return -1


@njit(cache=True)
def _fly_kernel(theta, v0, h, event_tol, A, B, mach, cdv, m2, factor, max_time, traj):
    """Integrate one shot.

    Returns (status, range, impact_time, n_steps, s, info). ``traj`` is
    either empty or has room for every full step plus the start and impact
    rows.
    """
    store = traj.shape[0] > 0
    s_count = B.shape[0]
    kbuf = np.empty((s_count, 4))
    ytmp = np.empty(4)
    y = np.empty(4)
    nxt = np.empty(4)
    y[0] = 0.0
    y[1] = 0.0
    y[2] = v0 * math.cos(theta)
    y[3] = v0 * math.sin(theta)
    if store:
        traj[0, 0] = 0.0
        for q in range(4):
            traj[0, q + 1] = y[q]
    n = 0
    while True:
        if n * h > max_time:
            return _TOO_LONG, 0.0, n * h, n, 0.0, 0.0
        bad = _step(y, h, A, B, kbuf, ytmp, nxt, mach, cdv, m2, factor)
        if bad >= 0:
            return _BLOWUP, 0.0, n * h, n, 0.0, float(bad)
        if nxt[1] <= 0.0:
            break
        for q in range(4):
            y[q] = nxt[q]
        n += 1
        if store:
            traj[n, 0] = n * h
            for q in range(4):
                traj[n, q + 1] = y[q]
    # bisection on the length of the final step
    lo = 0.0
    hi = h
    glo = y[1]
    ghi = nxt[1]
    if glo * ghi > 0.0:
        return _NO_BRACKET, 0.0, n * h, n, 0.0, glo
    tol = h * event_tol
    for _ in range(400):
        if hi - lo <= 2.0 * tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        bad = _step(y, mid, A, B, kbuf, ytmp, nxt, mach, cdv, m2, factor)
        if bad >= 0:
            return _BLOWUP, 0.0, n * h + mid, n, mid, float(bad)
        gm = nxt[1]
        if glo * gm <= 0.0:
            hi = mid
        else:
            lo = mid
            glo = gm
    s = 0.5 * (lo + hi)
    if s > 0.0:
        bad = _step(y, s, A, B, kbuf, ytmp, nxt, mach, cdv, m2, factor)
        if bad >= 0:
            return _BLOWUP, 0.0, n * h + s, n, s, float(bad)
    else:
        for q in range(4):
            nxt[q] = y[q]
    if store:
        traj[n + 1, 0] = n * h + s
        for q in range(4):
            traj[n + 1, q + 1] = nxt[q]
    return _OK, nxt[0], n * h + s, n, s, nxt[1]


def shell_ode(spec: ShellSpec):
    """Right-hand side ``F(t, y)`` for ``y = (x, altitude, vx, vy)``.

    Acceleration is gravity plus drag ``-(rho |v| Cd(|v|/a) pi d^2 / (8 m)) v``.
    """
    tab = spec.drag
    factor = spec.drag_factor

    def F(t, y):
        y = np.ascontiguousarray(y, dtype=np.float64)
        out = np.empty(4)
        _rhs(y, out, tab.mach, tab.cd_values, tab.m2, factor)
        return out

    return F


def _run(spec, setup, traj):
    m = get_method(setup.method)
    tab = spec.drag
    return _fly_kernel(
        float(setup.theta), float(spec.muzzle_speed), float(setup.h), float(setup.event_tol),
        m.a, m.b, tab.mach, tab.cd_values, tab.m2, spec.drag_factor, MAX_FLIGHT_TIME, traj,
    )


_EMPTY = np.empty((0, 5))


def _check(status, t, n, s, info):
    if status == _OK:
        return
    if status == _BLOWUP:
        raise IntegrationBlowupError(t, int(info))
    if status == _NO_BRACKET:
        raise EventLocationError(f"ground crossing not bracketed in final step (altitude {info})")
    raise NonTerminationError(f"flight exceeded {MAX_FLIGHT_TIME} s")


def fly(spec: ShellSpec, setup: LaunchSetup, store: bool = False) -> FlightResult:
    """Fly one shell and return range, impact time and optionally the trajectory."""
    status, rng, t, n, s, info = _run(spec, setup, _EMPTY)
    _check(status, t, n, s, info)
    traj = None
    if store:
        buf = np.empty((n + 2, 5))
        _run(spec, setup, buf)
        traj = buf
    return FlightResult(rng, t, traj, n, s)


def range_function(spec: ShellSpec, h: float, method="rk1", event_tol: float = UNIT_ROUNDOFF):
    """Return ``theta -> range`` for a fixed step size, method and event tolerance."""
    LaunchSetup(math.pi / 4, h, get_method(method).name, event_tol)  # validate once

    def range_at(theta):
        setup = LaunchSetup(float(theta), h, method, event_tol)
        status, rng, t, n, s, info = _run(spec, setup, _EMPTY)
        _check(status, t, n, s, info)
        return rng

    return range_at


def max_range(spec: ShellSpec, h: float, method="rk1", event_tol: float = UNIT_ROUNDOFF, tol_rel: float = UNIT_ROUNDOFF):
    """Golden-section maximum of the range over elevations in ``[0, pi/2]``.

    Returns ``(theta_star, range_star)``.
    """
    return golden_max(range_function(spec, h, method, event_tol), (0.0, math.pi / 2), tol_rel)


def _sweep_entry(args):
    spec, k, method, event_tol, tol_rel = args
    return k, max_range(spec, math.ldexp(SWEEP_H0, -k), method, event_tol, tol_rel)[1]


def maxrange_sweep(spec: ShellSpec, method="rk1", event_tol: float = UNIT_ROUNDOFF, k_range=range(1, 13),
                   tol_rel: float = UNIT_ROUNDOFF, jobs: int = 1) -> SampleSweep:
    """Maximum range at ``h_k = 2**(3-k)`` s for each ``k`` in ``k_range``.

    With ``jobs > 1`` the levels are computed in worker processes; entries are
    always assembled in ``k`` order.
    """
    ks = sorted(int(k) for k in k_range)
    if not ks or ks[0] < 1 or ks[-1] > 16:
        raise InvalidInputError("k_range must be a nonempty subset of 1..16")
    name = get_method(method).name
    tasks = [(spec, k, name, event_tol, tol_rel) for k in ks]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(_sweep_entry, tasks))
    else:
        entries = [_sweep_entry(t) for t in tasks]
    label = f"max range {spec.drag.family} {name} event_tol={event_tol!r} [m]"
    return SampleSweep(SWEEP_H0, tuple(entries), label)
