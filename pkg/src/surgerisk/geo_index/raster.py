"""DEM rasters relative to MHHW and bathtub sea-level-rise inundation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import shapely
from scipy import ndimage

from ..units import FT

SLR_MAX_FT = 6.0
_FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True, eq=False)
class DemRaster:
    """North-up lon/lat raster. Row 0 is the northern edge; NaN marks no data."""

    values: np.ndarray
    xll: float
    yll: float
    cellsize: float
    sea_mask: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        m = np.array(self.sea_mask, dtype=bool)
        if v.ndim != 2 or m.shape != v.shape:
            raise ValueError(f"DEM {v.shape} and sea mask {m.shape} must be matching 2-D grids")
        if self.cellsize <= 0:
            raise ValueError("cellsize must be positive")
        if np.isinf(v).any():
            raise ValueError("DEM contains infinite values")
        if (~np.isfinite(v[m])).any() or (v[m] > 0).any():
            raise ValueError("sea-mask cells must have finite elevation <= 0")
        v.flags.writeable = False
        m.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "sea_mask", m)

    @property
    def shape(self):
        return self.values.shape

    @property
    def extent(self):
        nr, nc = self.shape
        return (self.xll, self.yll, self.xll + nc * self.cellsize, self.yll + nr * self.cellsize)

    def cell_box(self, r, c):
        nr = self.shape[0]
        x0 = self.xll + c * self.cellsize
        y0 = self.yll + (nr - 1 - r) * self.cellsize
        return x0, y0, x0 + self.cellsize, y0 + self.cellsize

    def locate(self, lon, lat):
        """(row, col, inside) for points; inside is False off the raster."""
        lon, lat = np.asarray(lon, dtype=float), np.asarray(lat, dtype=float)
        nr, nc = self.shape
        c = np.floor((lon - self.xll) / self.cellsize).astype(np.int64)
        r = nr - 1 - np.floor((lat - self.yll) / self.cellsize).astype(np.int64)
        inside = (c >= 0) & (c < nc) & (r >= 0) & (r < nr)
        return np.where(inside, r, 0), np.where(inside, c, 0), inside

    def sample(self, lon, lat):
        """Elevation (m) at points by nearest cell; NaN off the raster or on no-data."""
        r, c, inside = self.locate(lon, lat)
        return np.where(inside, self.values[r, c], np.nan)


def slr_inundation(dem: DemRaster, level_ft: float) -> np.ndarray:
    """Cells at or below ``level_ft`` that connect (4-neighbour) to open sea."""
    level_ft = float(level_ft)
    if not 0.0 <= level_ft <= SLR_MAX_FT:
        raise ValueError(f"SLR level {level_ft} ft outside [0, {SLR_MAX_FT}] ft")
    low = dem.values <= level_ft * FT  # NaN compares False
    labels, _ = ndimage.label(low, structure=_FOUR)
    seeds = np.unique(labels[dem.sea_mask & low])
    seeds = seeds[seeds > 0]
    return np.isin(labels, seeds)


def zone_inundation_flags(zones, dem: DemRaster, inundated: np.ndarray) -> dict:
    """zone_id -> True iff some inundated raster cell overlaps the zone interior."""
    nr, nc = dem.shape
    cs = dem.cellsize
    out = {}
    for z in zones:
        minx, miny, maxx, maxy = z.geometry.bounds
        c0 = max(int(np.floor((minx - dem.xll) / cs)), 0)
        c1 = min(int(np.floor((maxx - dem.xll) / cs)), nc - 1)
        r0 = max(nr - 1 - int(np.floor((maxy - dem.yll) / cs)), 0)
        r1 = min(nr - 1 - int(np.floor((miny - dem.yll) / cs)), nr - 1)
        if c0 > c1 or r0 > r1:
            out[z.zone_id] = False
            continue
        rr, cc = np.nonzero(inundated[r0:r1 + 1, c0:c1 + 1])
        if rr.size == 0:
            out[z.zone_id] = False
            continue
        x0, y0, x1, y1 = dem.cell_box(rr + r0, cc + c0)
        boxes = shapely.box(x0, y0, x1, y1)
        shapely.prepare(z.geometry)
        out[z.zone_id] = bool(shapely.relate_pattern(z.geometry, boxes, "T********").any())
    return out


# ESRI ASCII grid I/O

def read_ascii_grid(path):
    header = {}
    with open(path) as fh:
        lines = fh.readlines()
    k = 0
    while k < len(lines):
        parts = lines[k].split()
        if not parts:
            k += 1
            continue
        try:
            float(parts[0])
            break
        except ValueError:
            if len(parts) != 2:
                raise ValueError(f"{path}:{k + 1}: malformed header line")
            header[parts[0].lower()] = parts[1]
            k += 1
    for key in ("ncols", "nrows", "cellsize"):
        if key not in header:
            raise ValueError(f"{path}: missing '{key}' header")
    ncols, nrows = int(header["ncols"]), int(header["nrows"])
    cs = float(header["cellsize"])
    if "xllcorner" in header:
        xll, yll = float(header["xllcorner"]), float(header["yllcorner"])
    else:
        xll = float(header["xllcenter"]) - cs / 2
        yll = float(header["yllcenter"]) - cs / 2
    data = np.array(" ".join(lines[k:]).split(), dtype=float)
    if data.size != nrows * ncols:
        raise ValueError(f"{path}: expected {nrows * ncols} values, found {data.size}")
    data = data.reshape(nrows, ncols)
    if "nodata_value" in header:
        data[data == float(header["nodata_value"])] = np.nan
    return data, xll, yll, cs


def write_ascii_grid(path, values, xll, yll, cellsize, nodata=-9999.0, fmt="%.17g"):
    values = np.asarray(values, dtype=float)
    nr, nc = values.shape
    with open(path, "w") as fh:
        fh.write(f"ncols {nc}\nnrows {nr}\nxllcorner {xll!r}\nyllcorner {yll!r}\n"
                 f"cellsize {cellsize!r}\nNODATA_value {nodata:g}\n")
        np.savetxt(fh, np.where(np.isnan(values), nodata, values), fmt=fmt)


def load_dem(dem_path, sea_mask_path) -> DemRaster:
    v, xll, yll, cs = read_ascii_grid(dem_path)
    m, mx, my, mcs = read_ascii_grid(sea_mask_path)
    if m.shape != v.shape or not np.allclose([mx, my, mcs], [xll, yll, cs]):
        raise ValueError("sea mask grid does not align with the DEM")
    return DemRaster(v, xll, yll, cs, np.nan_to_num(m) > 0)


def save_dem(dem: DemRaster, dem_path, sea_mask_path):
    write_ascii_grid(dem_path, dem.values, dem.xll, dem.yll, dem.cellsize)
    write_ascii_grid(sea_mask_path, dem.sea_mask.astype(float), dem.xll, dem.yll, dem.cellsize, fmt="%d")
