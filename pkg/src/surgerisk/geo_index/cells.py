"""Polar cell geometry in lon/lat."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import shapely

from ..surge_sim.grid import BasinGrid


@dataclass(frozen=True, eq=False)
class CellGeometry:
    basin_id: str
    index: tuple
    corners: np.ndarray  # (4, 2) lon/lat
    area_m2: float

    @property
    def bbox(self):
        c = self.corners
        return (c[:, 0].min(), c[:, 1].min(), c[:, 0].max(), c[:, 1].max())

    @property
    def polygon(self):
        return shapely.Polygon(self.corners)


def _corner_xy(basin: BasinGrid, i, j):
    e = basin.radial_edges
    th = basin.dtheta
    r = np.stack([e[i], e[i + 1], e[i + 1], e[i]], axis=-1)
    t = np.stack([j * th, j * th, (j + 1) * th, (j + 1) * th], axis=-1)
    return r * np.sin(t), r * np.cos(t)


def _shoelace(x, y):
    return 0.5 * np.abs(np.sum(x * np.roll(y, -1, axis=-1) - np.roll(x, -1, axis=-1) * y, axis=-1))


def cell_polygon(basin: BasinGrid, i: int, j: int) -> CellGeometry:
    nr, na = basin.shape
    if not (0 <= i < nr and 0 <= j < na):
        raise IndexError(f"cell ({i}, {j}) outside grid {basin.shape}")
    x, y = _corner_xy(basin, np.asarray(i), np.asarray(j))
    lon, lat = basin.projection.to_lonlat(x, y)
    return CellGeometry(basin.basin_id, (i, j), np.column_stack([lon, lat]), float(_shoelace(x, y)))


@dataclass(frozen=True, eq=False)
class CellCollection:
    """All cells of one basin as vectorised geometry."""

    basin_id: str
    shape: tuple
    polygons: np.ndarray  # shapely Polygons, row-major
    bounds: np.ndarray  # (n, 4)
    areas_m2: np.ndarray

    def index_of(self, k: int) -> tuple:
        return divmod(int(k), self.shape[1])


def basin_cells(basin: BasinGrid) -> CellCollection:
    nr, na = basin.shape
    ii, jj = np.meshgrid(np.arange(nr), np.arange(na), indexing="ij")
    x, y = _corner_xy(basin, ii.ravel(), jj.ravel())
    lon, lat = basin.projection.to_lonlat(x, y)
    coords = np.stack([lon, lat], axis=-1)
    polys = shapely.polygons(coords)
    return CellCollection(basin.basin_id, basin.shape, polys, shapely.bounds(polys), _shoelace(x, y))
