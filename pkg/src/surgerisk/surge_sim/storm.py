"""Parametric hurricane description and its Holland-type wind/pressure field."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..projection import LocalProjection
from ..units import FT, MB, OMEGA, RHO_AIR


class OutOfWindowError(ValueError):
    """Requested time lies outside the storm track."""


@dataclass(frozen=True)
class WindModel:
    holland_b: float = 1.3
    inflow_angle_deg: float = 20.0
    rho_air: float = RHO_AIR
    coriolis: bool = True


@dataclass(frozen=True)
class StormParams:
    """One storm-parameter combination.

    ``track`` is a sequence of ``(lon, lat, hour)`` points with strictly
    increasing hours. Heading (degrees clockwise from north) and forward
    speed are derived from the track.
    """

    pressure_deficit: float  # mb
    radius_max_winds: float  # km
    track: tuple
    category: int
    tide_offset: float = 0.0  # ft above still-water datum
    storm_id: str = "storm"

    def __post_init__(self):
        track = tuple(tuple(float(v) for v in p) for p in self.track)
        object.__setattr__(self, "track", track)
        if not self.pressure_deficit >= 0:
            raise ValueError(f"pressure_deficit must be >= 0, got {self.pressure_deficit}")
        if not self.radius_max_winds > 0:
            raise ValueError(f"radius_max_winds must be > 0, got {self.radius_max_winds}")
        if len(track) < 2:
            raise ValueError("track needs at least two points")
        times = [p[2] for p in track]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("track times must be strictly increasing")
        if self.category not in (1, 2, 3, 4, 5):
            raise ValueError(f"category must be in 1..5, got {self.category}")

    @classmethod
    def from_landfall(cls, pressure_deficit, radius_max_winds, heading, forward_speed,
                      landfall_lon, landfall_lat, category, tide_offset=0.0, *,
                      landfall_hour=12.0, duration_h=24.0, storm_id="storm"):
        """Straight track through a landfall point, sampled hourly."""
        proj = LocalProjection(landfall_lon, landfall_lat)
        hd = math.radians(heading)
        hours = np.arange(0.0, duration_h + 1e-9, 1.0)
        if hours[-1] < duration_h:
            hours = np.append(hours, duration_h)
        dist = (hours - landfall_hour) * 3600.0 * forward_speed
        lon, lat = proj.to_lonlat(dist * math.sin(hd), dist * math.cos(hd))
        track = tuple(zip(lon.tolist(), lat.tolist(), hours.tolist()))
        return cls(pressure_deficit, radius_max_winds, track, category, tide_offset, storm_id)

    @property
    def t_start(self) -> float:
        return self.track[0][2]

    @property
    def t_end(self) -> float:
        return self.track[-1][2]

    @property
    def tide_m(self) -> float:
        return self.tide_offset * FT

    def _segment(self, t):
        if t < self.t_start or t > self.t_end:
            raise OutOfWindowError(
                f"t={t} h outside track window [{self.t_start}, {self.t_end}] for {self.storm_id}")
        times = [p[2] for p in self.track]
        k = min(max(np.searchsorted(times, t, side="right") - 1, 0), len(times) - 2)
        return self.track[k], self.track[k + 1]

    def center_at(self, t):
        a, b = self._segment(t)
        w = (t - a[2]) / (b[2] - a[2])
        return a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])

    def motion_at(self, t):
        """(heading deg, speed m/s) of the track segment containing ``t``."""
        a, b = self._segment(t)
        return _motion(a, b)

    @property
    def heading(self) -> float:
        return _motion(self.track[0], self.track[-1])[0]

    @property
    def forward_speed(self) -> float:
        return _motion(self.track[0], self.track[-1])[1]


def _motion(a, b):
    proj = LocalProjection(a[0], 0.5 * (a[1] + b[1]))
    xa, ya = proj.to_xy(a[0], a[1])
    xb, yb = proj.to_xy(b[0], b[1])
    dx, dy = xb - xa, yb - ya
    dist = math.hypot(float(dx), float(dy))
    heading = math.degrees(math.atan2(float(dx), float(dy))) % 360.0
    return heading, dist / ((b[2] - a[2]) * 3600.0)


def holland_profile(r, dp_pa, rmax_m, b, rho_air=RHO_AIR, f=0.0):
    """Gradient wind speed (m/s) and pressure deficit (Pa) at radius ``r`` (m)."""
    r = np.maximum(np.asarray(r, dtype=float), 1.0)
    x = (rmax_m / r) ** b
    ex = np.exp(-x)
    half_rf = 0.5 * r * abs(f)
    speed = np.sqrt(b * dp_pa / rho_air * x * ex + half_rf ** 2) - half_rf
    return speed, dp_pa * (1.0 - ex)


def storm_field_xy(storm: StormParams, t: float, x, y, proj: LocalProjection,
                   model: WindModel = WindModel()):
    """Wind (east, north) m/s and pressure deficit Pa at projected points.

    ``x``, ``y`` are metres in ``proj``. Storm rotation is cyclonic for the
    northern hemisphere; the translation vector is added with weight
    ``V(r)/V(rmax)`` so it vanishes in the far field.
    """
    clon, clat = storm.center_at(t)
    cx, cy = proj.to_xy(clon, clat)
    dx = np.asarray(x, dtype=float) - cx
    dy = np.asarray(y, dtype=float) - cy
    r = np.hypot(dx, dy)
    f = 2.0 * OMEGA * math.sin(math.radians(clat)) if model.coriolis else 0.0
    dp = storm.pressure_deficit * MB
    rmax = storm.radius_max_winds * 1000.0
    speed, deficit = holland_profile(r, dp, rmax, model.holland_b, model.rho_air, f)
    if dp == 0.0:
        zero = np.zeros_like(r)
        return zero, zero.copy(), zero.copy()
    rs = np.maximum(r, 1.0)
    # cyclonic tangent and inward radial unit vectors
    tx, ty = -dy / rs, dx / rs
    ix, iy = -dx / rs, -dy / rs
    a = math.radians(model.inflow_angle_deg)
    u = speed * (math.cos(a) * tx + math.sin(a) * ix)
    v = speed * (math.cos(a) * ty + math.sin(a) * iy)
    heading, fwd = storm.motion_at(t)
    if fwd > 0.0:
        peak = float(holland_profile(rmax, dp, rmax, model.holland_b, model.rho_air, f)[0])
        w = speed / peak if peak > 0 else 0.0
        hd = math.radians(heading)
        u = u + w * fwd * math.sin(hd)
        v = v + w * fwd * math.cos(hd)
    return u, v, deficit


def wind_pressure_field(storm: StormParams, point, t: float, model: WindModel = WindModel()):
    """Wind vector ``(east, north)`` in m/s and pressure deficit in Pa at one
    ``(lon, lat)`` point and time ``t`` (hours)."""
    lon, lat = point
    proj = LocalProjection(lon, lat)
    u, v, d = storm_field_xy(storm, t, 0.0, 0.0, proj, model)
    return (float(u), float(v)), float(d)
