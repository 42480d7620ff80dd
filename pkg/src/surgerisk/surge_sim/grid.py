"""Polar basin grids."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..projection import LocalProjection
from ..units import OMEGA


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BasinGrid:
    """Polar computation grid centred on ``pole``.

    Cell ``(i, j)`` spans radii ``radial_edges[i]..radial_edges[i+1]`` and
    bearings ``j*dtheta..(j+1)*dtheta`` (clockwise from north); the sectors
    cover the full circle. ``cell_elevation`` is metres relative to the
    still-water datum, negative under water, shaped ``(rings, sectors)``.
    """

    basin_id: str
    pole: tuple
    radial_edges: np.ndarray
    angular_count: int
    cell_elevation: np.ndarray
    friction_coeff: np.ndarray | float = 2.5e-3

    def __post_init__(self):
        edges = _frozen(self.radial_edges)
        object.__setattr__(self, "radial_edges", edges)
        object.__setattr__(self, "pole", (float(self.pole[0]), float(self.pole[1])))
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0) or edges[0] < 0:
            raise ValueError("radial_edges must be non-negative and strictly increasing")
        if int(self.angular_count) < 3:
            raise ValueError("angular_count must be >= 3")
        object.__setattr__(self, "angular_count", int(self.angular_count))
        elev = _frozen(self.cell_elevation)
        if elev.shape != self.shape:
            raise ValueError(f"cell_elevation shape {elev.shape} != {self.shape}")
        if not np.all(np.isfinite(elev)):
            raise ValueError("cell_elevation must be finite")
        object.__setattr__(self, "cell_elevation", elev)
        fric = _frozen(np.broadcast_to(np.asarray(self.friction_coeff, dtype=float), self.shape))
        if np.any(fric < 0):
            raise ValueError("friction_coeff must be >= 0")
        object.__setattr__(self, "friction_coeff", fric)

    @property
    def n_rings(self) -> int:
        return self.radial_edges.size - 1

    @property
    def shape(self) -> tuple:
        return (self.radial_edges.size - 1, self.angular_count)

    @property
    def n_cells(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def dtheta(self) -> float:
        return 2.0 * math.pi / self.angular_count

    @property
    def projection(self) -> LocalProjection:
        return LocalProjection(*self.pole)

    @property
    def coriolis(self) -> float:
        return 2.0 * OMEGA * math.sin(math.radians(self.pole[1]))

    @property
    def ring_centers(self) -> np.ndarray:
        return 0.5 * (self.radial_edges[1:] + self.radial_edges[:-1])

    @property
    def cell_area(self) -> np.ndarray:
        """Exact annular-sector areas (m^2), shape ``(rings, 1)``."""
        e = self.radial_edges
        return (0.5 * (e[1:] ** 2 - e[:-1] ** 2) * self.dtheta)[:, None]

    @cached_property
    def _centers_xy(self):
        r = self.ring_centers[:, None]
        th = (np.arange(self.angular_count) + 0.5) * self.dtheta
        x, y = r * np.sin(th)[None, :], r * np.cos(th)[None, :]
        x.setflags(write=False)
        y.setflags(write=False)
        return x, y

    def cell_centers_xy(self):
        return self._centers_xy

    def cell_centers_lonlat(self):
        return self.projection.to_lonlat(*self.cell_centers_xy())

    def min_cell_width(self) -> float:
        """Smallest radial or angular cell width, as used in the discrete gradients."""
        return float(min(np.diff(self.radial_edges).min(), self.ring_centers[0] * self.dtheta))

    def bounding_radius(self) -> float:
        return float(self.radial_edges[-1])

    def same_grid(self, other: "BasinGrid") -> bool:
        return (self.basin_id == other.basin_id and self.shape == other.shape
                and np.array_equal(self.radial_edges, other.radial_edges))


def uniform_basin(basin_id, pole, r_inner, dr, n_rings, angular_count, elevation_fn,
                  friction=2.5e-3) -> BasinGrid:
    """Build a basin with equal radial spacing; ``elevation_fn(x, y)`` in metres."""
    edges = r_inner + dr * np.arange(n_rings + 1)
    probe = BasinGrid(basin_id, pole, edges, angular_count, np.zeros((n_rings, angular_count)))
    x, y = probe.cell_centers_xy()
    return BasinGrid(basin_id, pole, edges, angular_count, elevation_fn(x, y), friction)
