"""Zone x cell joins, surge above ground, zone maxima and SFHA shares."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import shapely

from ..surge_sim.envelope import MomField
from ..surge_sim.grid import BasinGrid
from ..units import m_to_ft
from .cells import CellCollection
from .raster import DemRaster
from .rtree import SpatialIndex
from .zonegeom import GeometryError, ZoneRecord

INTERIOR_OVERLAP = "T********"


@dataclass
class JoinResult:
    cells: dict = field(default_factory=dict)  # zone_id -> [(basin_id, i, j), ...]
    errors: dict = field(default_factory=dict)  # zone_id -> message

    def __getitem__(self, zone_id):
        return self.cells[zone_id]

    def get(self, zone_id, default=None):
        return self.cells.get(zone_id, default)


def zone_cell_join(zones, cells: CellCollection, index: SpatialIndex | None = None) -> JoinResult:
    """Cells whose interiors overlap each zone. Invalid zones go to ``errors``."""
    if index is None:
        index = SpatialIndex(cells.bounds)
    if len(index) != len(cells.polygons):
        raise ValueError("index was not built over these cells")
    out = JoinResult()
    for z in zones:
        msg = z.validation_error()
        if msg is not None:
            out.errors[z.zone_id] = msg
            continue
        cand = index.query(z.geometry.bounds)
        hits = []
        if cand.size:
            shapely.prepare(z.geometry)
            keep = shapely.relate_pattern(z.geometry, cells.polygons[cand], INTERIOR_OVERLAP)
            hits = [(cells.basin_id, *cells.index_of(k)) for k in cand[keep]]
        out.cells[z.zone_id] = hits
    return out


def merge_joins(*joins: JoinResult) -> JoinResult:
    """Combine joins from several basins; a zone erroring anywhere stays in error."""
    out = JoinResult()
    for j in joins:
        for zid, lst in j.cells.items():
            out.cells.setdefault(zid, []).extend(lst)
        out.errors.update(j.errors)
    for zid in out.errors:
        out.cells.pop(zid, None)
    return out


def surge_height_ft(water_m, ground_m):
    """Scalar rule: water above max(ground, datum), clamped at zero, in feet."""
    return m_to_ft(np.maximum(0.0, np.asarray(water_m) - np.maximum(np.asarray(ground_m), 0.0)))


def surge_above_ground(mom: MomField, basin: BasinGrid, dem: DemRaster | None = None,
                       dry_threshold: float = 0.01) -> np.ndarray:
    """Per-cell surge height in feet; NaN marks cells without ground elevation.

    Ground comes from the DEM (sampled at the cell centre) when one is given,
    otherwise from the basin's own cell elevations. Cells the water never
    reached keep zero surge regardless of the ground source.
    """
    if mom.basin_id != basin.basin_id or mom.values.shape != basin.shape:
        raise ValueError(f"MOM for basin {mom.basin_id} does not match grid {basin.basin_id}")
    water = mom.values
    if dem is None:
        ground = basin.cell_elevation
    else:
        lon, lat = basin.cell_centers_lonlat()
        ground = dem.sample(lon, lat)
    h = surge_height_ft(water, ground)
    h = np.where(water - basin.cell_elevation <= dry_threshold, 0.0, h)
    return np.where(np.isnan(ground), np.nan, h)


def zone_max_surge(zone_id, fields: dict, join: JoinResult):
    """Maximum surge (ft) over intersecting cells of every basin, or None if uncovered."""
    best = None
    for basin_id, i, j in join.cells.get(zone_id, ()):
        f = fields.get(basin_id)
        if f is None:
            continue
        v = f[i, j]
        if np.isnan(v):
            continue
        if best is None or v > best:
            best = float(v)
    return best


def zone_max_surge_all(fields: dict, join: JoinResult) -> dict:
    return {zid: zone_max_surge(zid, fields, join) for zid in join.cells}


class SfhaLayer:
    """Union of flood-zone polygons prepared for repeated clipping."""

    def __init__(self, polygons):
        polygons = list(polygons)
        bad = [k for k, g in enumerate(polygons) if not g.is_valid]
        if bad:
            raise GeometryError(f"invalid SFHA polygons at positions {bad[:10]}")
        self.union = shapely.union_all(polygons) if polygons else shapely.Polygon()
        shapely.prepare(self.union)

    def share(self, zone) -> float:
        geom = zone.geometry if isinstance(zone, ZoneRecord) else zone
        a = geom.area
        if not a > 0:
            raise GeometryError("zone has degenerate area")
        if self.union.is_empty or not self.union.intersects(geom):
            return 0.0
        if self.union.contains(geom):
            return 1.0
        return float(min(1.0, max(0.0, geom.intersection(self.union).area / a)))


def sfha_area_share(zone, sfha_polygons) -> float:
    layer = sfha_polygons if isinstance(sfha_polygons, SfhaLayer) else SfhaLayer(sfha_polygons)
    return layer.share(zone)
