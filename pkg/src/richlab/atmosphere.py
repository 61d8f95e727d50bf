"""Two-layer International Standard Atmosphere (troposphere + lower stratosphere)."""

from __future__ import annotations

import math
from typing import NamedTuple

from numba import njit

from .errors import InvalidInputError

__all__ = [
    "AtmosphereState",
    "isa_at",
    "density_and_sound_speed",
    "G0",
    "R_SPECIFIC",
    "GAMMA",
    "T0",
    "P0",
    "LAPSE_RATE",
    "TROPOPAUSE",
    "ALT_MIN",
    "ALT_MAX",
]

G0 = 9.80665
R_SPECIFIC = 287.05287
GAMMA = 1.4
T0 = 288.15
P0 = 101325.0
LAPSE_RATE = 0.0065  # K/m
TROPOPAUSE = 11000.0
ALT_MIN = -500.0
ALT_MAX = 20000.0

T_TROPOPAUSE = T0 - LAPSE_RATE * TROPOPAUSE
_EXPONENT = G0 / (LAPSE_RATE * R_SPECIFIC)
P_TROPOPAUSE = P0 * (T_TROPOPAUSE / T0) ** _EXPONENT


class AtmosphereState(NamedTuple):
    temperature: float
    pressure: float
    density: float
    speed_of_sound: float
    clamped: bool = False


@njit(cache=True)
def _temperature_pressure(alt):
    if alt < ALT_MIN:
        alt = ALT_MIN
    elif alt > ALT_MAX:
        alt = ALT_MAX
    if alt <= TROPOPAUSE:
        t = T0 - LAPSE_RATE * alt
        p = P0 * (t / T0) ** _EXPONENT
    else:
        t = T_TROPOPAUSE
        p = P_TROPOPAUSE * math.exp(-G0 * (alt - TROPOPAUSE) / (R_SPECIFIC * T_TROPOPAUSE))
    return t, p


@njit(cache=True)
def density_and_sound_speed(alt):
    """Air density [kg/m^3] and speed of sound [m/s] at ``alt`` metres (clamped)."""
    t, p = _temperature_pressure(alt)
    return p / (R_SPECIFIC * t), math.sqrt(GAMMA * R_SPECIFIC * t)


def isa_at(altitude: float) -> AtmosphereState:
    """Atmospheric state at ``altitude`` metres.

    Altitudes outside ``[ALT_MIN, ALT_MAX]`` are clamped to the nearest bound
    and the returned state has ``clamped=True``.
    """
    altitude = float(altitude)
    if math.isnan(altitude):
        raise InvalidInputError("altitude is NaN")
    clamped = not (ALT_MIN <= altitude <= ALT_MAX)
    t, p = _temperature_pressure(altitude)
    return AtmosphereState(t, p, p / (R_SPECIFIC * t), math.sqrt(GAMMA * R_SPECIFIC * t), clamped)
