"""Unit conversions and physical constants shared across modules."""

FT = 0.3048  # metres per foot, exact
MB = 100.0  # pascals per millibar
EARTH_RADIUS = 6_371_000.0
OMEGA = 7.2921159e-5
GRAVITY = 9.81
RHO_AIR = 1.15
RHO_WATER = 1025.0


def ft_to_m(x):
    return x * FT


def m_to_ft(x):
    return x / FT
