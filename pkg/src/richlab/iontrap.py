"""Ions in a damped harmonic trap with (optionally truncated) Coulomb repulsion.

Each ion is pulled to the origin by a Hooke spring, slowed by linear friction
and repelled by every other ion. The Coulomb field can be multiplied by a
switching function that cuts it off: ``g2_step`` is discontinuous at half the
reference edge length, ``g4_smooth`` blends smoothly from one to zero between
0.5 and 0.95 of it.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from numba import njit

from .errors import InvalidInputError, SingularityError
from .extrapolation import SampleSweep
from .integrators import get_method, integrate_fixed
from .solvers import bisect

__all__ = [
    "IonSystem",
    "SwitchingFunction",
    "SWITCHING_KINDS",
    "pair_field",
    "switching_value",
    "total_force",
    "equilibrium_edge",
    "tetrahedron",
    "default_system",
    "kinetic_energy",
    "total_energy",
    "kinetic_energy_sweep",
    "first_order_rhs",
    "DEFAULT_K_RANGE",
    "switching_for",
]

SWITCHING_KINDS = ("none", "g2_step", "g4_smooth")
_KIND_CODE = {"none": 0, "g2_step": 1, "g4_smooth": 2}
_ALIASES = {"g2": "g2_step", "g4": "g4_smooth"}

# g4 blends over [0.5 rho, 0.95 rho]
_INNER = 0.5
_OUTER = 0.95

# unit tetrahedron vertices (circumradius sqrt(3), edge 2 sqrt(2))
_TETRA = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]])

DEFAULT_COMPRESSION = 0.5
DEFAULT_K_RANGE = range(5, 17)

# deterministic perturbation of the default start, in units of the edge length
_PERTURB = np.array(
    [[0.06, -0.03, 0.02], [-0.04, 0.05, -0.01], [0.03, 0.02, -0.05], [-0.02, -0.04, 0.03]]
)


@dataclass(frozen=True)
class SwitchingFunction:
    kind: str = "none"
    rho: float = 1.0

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in SWITCHING_KINDS:
            raise InvalidInputError(f"unknown switching function {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise InvalidInputError("rho must be positive")

    @property
    def code(self):
        return _KIND_CODE[self.kind]


@dataclass(frozen=True, eq=False)
class IonSystem:
    """Identical ions with charge ``q`` and ``mass``, positions/velocities of shape (m, 3)."""

    positions: np.ndarray
    velocities: np.ndarray
    q: float = 1.0
    coulomb_constant: float = 1.0
    spring_k: float = 1.0
    friction: float = 0.5
    mass: float = 1.0
    t_end: float = 8.0

    def __post_init__(self):
        x = np.array(self.positions, dtype=np.float64)
        v = np.array(self.velocities, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != 3 or v.shape != x.shape:
            raise InvalidInputError("positions and velocities must both have shape (m, 3)")
        for name in ("coulomb_constant", "spring_k", "mass", "t_end"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        if self.friction < 0:
            raise InvalidInputError("friction must be nonnegative")
        for i in range(len(x)):
            for j in range(i):
                if not np.any(x[i] != x[j]):
                    raise SingularityError(f"ions {j} and {i} coincide")
        x.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "velocities", v)

    @property
    def m_ions(self):
        return self.positions.shape[0]

    def with_state(self, positions, velocities):
        return replace(self, positions=positions, velocities=velocities)


def pair_field(q: float, c: float, r_vec) -> np.ndarray:
    """Field ``c q r / |r|^3`` of a charge ``q`` at the origin, evaluated at ``r_vec``."""
    r_vec = np.asarray(r_vec, dtype=np.float64)
    r = math.sqrt(float(np.dot(r_vec, r_vec)))
    if r == 0.0:
        raise SingularityError("field evaluated at the source charge")
    return c * q * r_vec / r**3


@njit(cache=True)
def _phi(s):
    return math.exp(-1.0 / s) if s > 0.0 else 0.0


@njit(cache=True)
def _switch(code, rho, r):
    if code == 0:
        return 1.0
    if code == 1:
        return 1.0 if r < _INNER * rho else 0.0
    if r <= _INNER * rho:
        return 1.0
    if r >= _OUTER * rho:
        return 0.0
    s = (r - _INNER * rho) / ((_OUTER - _INNER) * rho)
    a = _phi(1.0 - s)
    return a / (_phi(s) + a)


def switching_value(sf: SwitchingFunction, r: float) -> float:
    """Value of the switching function at distance ``r >= 0``."""
    if r < 0:
        raise InvalidInputError("distance must be nonnegative")
    return float(_switch(sf.code, sf.rho, float(r)))


@njit(cache=True)
def _forces(x, v, q, c, k, gamma, code, rho, out):
    """Total force on each ion into ``out``; returns -1 or the index of a coincident ion."""
    m = x.shape[0]
    for j in range(m):
        for d in range(3):
            out[j, d] = -k * x[j, d] - gamma * v[j, d]
    cqq = c * q * q
    for j in range(m):
        for i in range(j + 1, m):
            dx = x[j, 0] - x[i, 0]
            dy = x[j, 1] - x[i, 1]
            dz = x[j, 2] - x[i, 2]
            r2 = dx * dx + dy * dy + dz * dz
            if r2 == 0.0:
                return j
            r = math.sqrt(r2)
            w = _switch(code, rho, r)
            if w != 0.0:
                f = cqq * w / (r2 * r)
                out[j, 0] += f * dx
                out[j, 1] += f * dy
                out[j, 2] += f * dz
                out[i, 0] -= f * dx
                out[i, 1] -= f * dy
                out[i, 2] -= f * dz
    return -1


def _force_array(x, v, system, sf):
    out = np.empty_like(x)
    bad = _forces(x, v, system.q, system.coulomb_constant, system.spring_k, system.friction, sf.code, sf.rho, out)
    if bad >= 0:
        raise SingularityError(f"ion {bad} coincides with another ion")
    return out


def total_force(system: IonSystem, sf: Optional[SwitchingFunction] = None) -> np.ndarray:
    """Coulomb (switched) + spring + friction force on every ion, shape (m, 3)."""
    sf = sf or SwitchingFunction()
    return _force_array(system.positions, system.velocities, system, sf)


def first_order_rhs(system: IonSystem, sf: Optional[SwitchingFunction] = None):
    """``F(t, y)`` for the flattened state ``y = (x.ravel(), v.ravel())``."""
    sf = sf or SwitchingFunction()
    m = system.m_ions
    n = 3 * m
    inv_mass = 1.0 / system.mass

    def F(t, y):
        x = y[:n].reshape(m, 3)
        v = y[n:].reshape(m, 3)
        out = np.empty(2 * n)
        out[:n] = y[n:]
        out[n:] = (_force_array(x, v, system, sf) * inv_mass).ravel()
        return out

    return F


def tetrahedron(edge: float) -> np.ndarray:
    """Vertices of a regular tetrahedron centred at the origin."""
    return _TETRA * (edge / (2.0 * math.sqrt(2.0)))


def _radial_imbalance(system, edge):
    """Outward Coulomb force minus inward spring force on a vertex of the tetrahedron."""
    x = tetrahedron(edge)
    probe = IonSystem(x, np.zeros_like(x), system.q, system.coulomb_constant, system.spring_k, 0.0, system.mass)
    f = total_force(probe)
    unit = x[0] / np.linalg.norm(x[0])
    return float(np.dot(f[0], unit))


def equilibrium_edge(system: IonSystem) -> float:
    """Edge length of the equilibrium tetrahedron of four ions (unswitched field).

    Solves the radial force balance on a vertex by bisection to a relative
    tolerance of 1e-12.
    """
    if system.m_ions != 4:
        raise InvalidInputError("equilibrium_edge needs exactly four ions")

    def g(e):
        return _radial_imbalance(system, e)

    lo = hi = 1.0
    while g(lo) <= 0:  # too wide: spring wins
        lo *= 0.5
    while g(hi) >= 0:  # too narrow: Coulomb wins
        hi *= 2.0
    lo = min(lo, hi * 0.5)
    return bisect(g, (lo, hi), tol_abs=0.5e-12 * lo, max_iter=400)


def default_system(friction: float = 0.5, t_end: float = 8.0, compression: float = DEFAULT_COMPRESSION) -> IonSystem:
    """Four unit ions at rest on a squeezed, perturbed equilibrium tetrahedron.

    The squeeze puts the ions inside the switching shells at ``t = 0``, so
    the Coulomb field acts immediately; without it every ion would follow the
    same scaled spring trajectory and collide at the origin.
    """
    base = IonSystem(tetrahedron(1.0), np.zeros((4, 3)), friction=friction, t_end=t_end)
    edge = equilibrium_edge(base)
    x = tetrahedron(compression * edge) + _PERTURB * edge
    return base.with_state(x, np.zeros((4, 3)))


def switching_for(kind: str, system: Optional[IonSystem] = None) -> SwitchingFunction:
    """Switching function of ``kind`` with ``rho`` set to the equilibrium edge of ``system``."""
    system = system or default_system()
    return SwitchingFunction(kind, equilibrium_edge(system))


def kinetic_energy(system: IonSystem, velocities=None) -> float:
    v = system.velocities if velocities is None else np.asarray(velocities)
    return 0.5 * system.mass * float(np.sum(v * v))


def total_energy(system: IonSystem, positions=None, velocities=None) -> float:
    """Kinetic + spring + unswitched Coulomb potential energy."""
    x = system.positions if positions is None else np.asarray(positions)
    v = system.velocities if velocities is None else np.asarray(velocities)
    e = kinetic_energy(system, v) + 0.5 * system.spring_k * float(np.sum(x * x))
    cqq = system.coulomb_constant * system.q**2
    for j in range(len(x)):
        for i in range(j):
            e += cqq / float(np.linalg.norm(x[j] - x[i]))
    return e


def _kinetic_at_end(args):
    system, sf, method, k = args
    n = 1 << k
    h = system.t_end / n
    y0 = np.concatenate([system.positions.ravel(), system.velocities.ravel()])
    _, y = integrate_fixed(method, first_order_rhs(system, sf), 0.0, y0, h, n, store=False)[-1]
    return k, kinetic_energy(system, y[3 * system.m_ions:].reshape(-1, 3))


def kinetic_energy_sweep(system: IonSystem, sf: Optional[SwitchingFunction], method, k_range,
                         jobs: int = 1) -> SampleSweep:
    """Kinetic energy at ``t_end`` using ``2**k`` uniform steps for each ``k``.

    Levels run in ``jobs`` worker processes when ``jobs > 1``; results do not
    depend on ``jobs``.
    """
    sf = sf or SwitchingFunction()
    m = get_method(method)
    ks = sorted(int(k) for k in k_range)
    if not ks or ks[0] < 0:
        raise InvalidInputError("k_range must be a nonempty set of nonnegative integers")
    tasks = [(system, sf, m, k) for k in ks]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = tuple(pool.map(_kinetic_at_end, tasks))
    else:
        entries = tuple(_kinetic_at_end(t) for t in tasks)
    return SampleSweep(system.t_end, entries, f"kinetic energy at t={system.t_end} {m.name} sf={sf.kind}")
