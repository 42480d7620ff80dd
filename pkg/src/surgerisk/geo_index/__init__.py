"""Cell and zone geometry, spatial joins, DEM subtraction and SLR inundation."""
from .cells import CellCollection, CellGeometry, basin_cells, cell_polygon
from .join import (JoinResult, SfhaLayer, merge_joins, sfha_area_share, surge_above_ground,
                   surge_height_ft, zone_cell_join, zone_max_surge, zone_max_surge_all)
from .raster import (DemRaster, load_dem, read_ascii_grid, save_dem, slr_inundation,
                     write_ascii_grid, zone_inundation_flags)
from .rtree import SpatialIndex
from .zonegeom import (GeometryError, ZoneRecord, load_polygons_geojson, load_zones_geojson,
                       polygon_area_m2, polygons_to_geojson, zones_from_features, zones_to_geojson)
