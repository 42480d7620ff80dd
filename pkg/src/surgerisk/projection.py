"""Local equirectangular projection used for all planar geometry."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .units import EARTH_RADIUS


@dataclass(frozen=True)
class LocalProjection:
    """Maps lon/lat degrees to east/north metres about ``(lon0, lat0)``.

    The map is affine in lon/lat, so intersection predicates and area
    ratios computed in degrees agree with those computed in metres.
    """

    lon0: float
    lat0: float

    @property
    def mx(self) -> float:
        return EARTH_RADIUS * np.cos(np.radians(self.lat0)) * np.pi / 180.0

    @property
    def my(self) -> float:
        return EARTH_RADIUS * np.pi / 180.0

    def to_xy(self, lon, lat):
        return (np.asarray(lon) - self.lon0) * self.mx, (np.asarray(lat) - self.lat0) * self.my

    def to_lonlat(self, x, y):
        return self.lon0 + np.asarray(x) / self.mx, self.lat0 + np.asarray(y) / self.my

    def area_scale(self) -> float:
        """Square metres per square degree."""
        return self.mx * self.my
