"""Zone polygons (ZCTA5 / tract) and GeoJSON loading."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import shapely
from shapely.geometry import shape as _shape

from ..projection import LocalProjection


class GeometryError(ValueError):
    pass


def _oriented(geom):
    # exterior counter-clockwise, holes clockwise
    return shapely.orient_polygons(geom, exterior_cw=False)


@dataclass(frozen=True, eq=False)
class ZoneRecord:
    zone_id: str
    geometry: object  # shapely Polygon or MultiPolygon, lon/lat
    area_m2: float = field(default=float("nan"))

    def __post_init__(self):
        g = self.geometry
        if not isinstance(g, (shapely.Polygon, shapely.MultiPolygon)):
            raise GeometryError(f"zone {self.zone_id}: geometry must be polygonal, got {g.geom_type}")
        object.__setattr__(self, "geometry", _oriented(g))
        if self.area_m2 != self.area_m2:
            object.__setattr__(self, "area_m2", polygon_area_m2(self.geometry))

    @property
    def is_valid(self) -> bool:
        return bool(self.geometry.is_valid) and self.geometry.area > 0

    def validation_error(self):
        if self.geometry.is_empty or self.geometry.area <= 0:
            return "degenerate polygon (zero area)"
        if not self.geometry.is_valid:
            return f"invalid polygon: {shapely.is_valid_reason(self.geometry)}"
        return None


def polygon_area_m2(geom) -> float:
    """Planar area under an equirectangular projection at the geometry's centroid."""
    if geom.is_empty:
        return 0.0
    c = geom.centroid
    return geom.area * LocalProjection(c.x, c.y).area_scale()


def load_zones_geojson(path, id_field: str = "zone_id") -> list:
    with open(path) as fh:
        doc = json.load(fh)
    return zones_from_features(doc, id_field)


def zones_from_features(doc, id_field: str = "zone_id") -> list:
    if doc.get("type") != "FeatureCollection":
        raise GeometryError("expected a GeoJSON FeatureCollection")
    zones, seen = [], set()
    for k, feat in enumerate(doc.get("features", [])):
        props = feat.get("properties") or {}
        if id_field not in props:
            raise GeometryError(f"feature {k}: missing '{id_field}' property")
        zid = str(props[id_field])
        if zid in seen:
            raise GeometryError(f"feature {k}: duplicate zone_id {zid}")
        seen.add(zid)
        zones.append(ZoneRecord(zid, _shape(feat["geometry"])))
    return zones


def load_polygons_geojson(path) -> list:
    """All polygonal geometries of a FeatureCollection (e.g. SFHA areas)."""
    with open(path) as fh:
        doc = json.load(fh)
    out = []
    for feat in doc.get("features", []):
        g = _shape(feat["geometry"])
        if not isinstance(g, (shapely.Polygon, shapely.MultiPolygon)):
            raise GeometryError(f"non-polygonal feature: {g.geom_type}")
        out.append(g)
    return out


def zones_to_geojson(zones, path, extra=None):
    feats = []
    for z in zones:
        props = {"zone_id": z.zone_id}
        if extra:
            props.update(extra.get(z.zone_id, {}))
        feats.append({"type": "Feature", "properties": props,
                      "geometry": shapely.geometry.mapping(z.geometry)})
    with open(path, "w") as fh:
        json.dump({"type": "FeatureCollection", "features": feats}, fh)


def polygons_to_geojson(polygons, path):
    feats = [{"type": "Feature", "properties": {}, "geometry": shapely.geometry.mapping(g)}
             for g in polygons]
    with open(path, "w") as fh:
        json.dump({"type": "FeatureCollection", "features": feats}, fh)
