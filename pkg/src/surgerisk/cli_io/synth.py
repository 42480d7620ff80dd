"""Deterministic synthetic bundle: one coastal basin plus everything the pipeline reads.

The geography is a sinuous coastline north of the basin pole with a gentle
shelf offshore and a slowly rising coastal plain. Zones tile the plain as
jittered quadrilaterals. Loans, lenders, demographics and a price/rent panel
are generated per zone after the zones are classified by the real surge
model, so surge-zone loans can carry a fixed IO premium and surge-zone prices
a fixed price-to-rent drift.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import shapely

from ..exposure import BankRecord, DemographicRecord, LoanRecord, filter_loans_mcdash
from ..geo_index import DemRaster, ZoneRecord, polygons_to_geojson, save_dem, zones_to_geojson
from ..surge_sim import uniform_basin
from .config import PipelineConfig
from .formats import (StormSpec, write_banks, write_basin, write_demographics, write_loans,
                      write_panel, write_storms)

POLE = (-89.6, 29.3)


@dataclass(frozen=True)
class SynthScale:
    n_rings: int
    n_sectors: int
    r_inner: float
    dr: float
    zone_cols: int
    zone_rows: int
    dem_cellsize: float  # degrees
    loans_per_zone_year: float
    years: tuple = tuple(range(2010, 2019))
    panel_years: tuple = tuple(range(2010, 2020))


SCALES = {
    "small": SynthScale(60, 96, 4000.0, 900.0, 10, 10, 0.005, 40.0),
    "medium": SynthScale(110, 160, 4000.0, 500.0, 16, 14, 0.003, 60.0),
}


@dataclass(frozen=True)
class SynthParams:
    coast_y: float = 24000.0  # coast distance north of the pole, m
    coast_amp: float = 4000.0
    coast_wavelength: float = 15000.0
    shelf_depth: float = 6.0
    sea_slope: float = 3e-4
    land_slope: float = 6e-4
    tide_ft: float = 2.0
    cat3_dp: tuple = (60.0, 65.0, 70.0)  # pressure deficits, mb
    cat4_dp: tuple = (95.0, 105.0, 115.0)
    io_base: float = 0.05  # IO dollar share outside surge zones
    io_gap: float = 0.08
    p2r_drift: float = -0.01  # per year in surge15 zones
    nonbank_share: float = 0.3
    sim_duration_h: float = 18.0
    landfall_hour: float = 10.0
    track_duration_h: float = 16.0


@dataclass
class SynthBundle:
    seed: int
    scale: str
    basin: object
    storms: list  # StormSpec
    dem: DemRaster
    zones: list
    sfha: list
    loans: list = field(default_factory=list)
    banks: list = field(default_factory=list)
    demographics: list = field(default_factory=list)
    panel: list = field(default_factory=list)
    config: PipelineConfig = None
    classification: object = None

    def write(self, directory) -> Path:
        """Write every input file plus ``pipeline.json``; returns the config path."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        write_basin(d / "basin.txt", self.basin)
        write_storms(d / "storms.csv", self.storms)
        save_dem(self.dem, d / "dem.asc", d / "sea_mask.asc")
        zones_to_geojson(self.zones, d / "zones.geojson")
        polygons_to_geojson(self.sfha, d / "sfha.geojson")
        write_loans(d / "loans.csv", self.loans)
        write_banks(d / "banks.csv", self.banks)
        write_demographics(d / "demographics.csv", self.demographics)
        write_panel(d / "panel.csv", self.panel)
        names = dict(basins=(str(d / "basin.txt"),), storms=d / "storms.csv", dem=d / "dem.asc",
                     sea_mask=d / "sea_mask.asc", zones=d / "zones.geojson", sfha=d / "sfha.geojson",
                     loans=d / "loans.csv", banks=d / "banks.csv", demographics=d / "demographics.csv",
                     panel=d / "panel.csv", output_dir=d / "out")
        cfg = self.config.with_overrides(**{k: (v if k == "basins" else str(v)) for k, v in names.items()})
        cfg.to_json(d / "pipeline.json", relative_to=d)
        return d / "pipeline.json"


def _coast(p: SynthParams):
    return lambda x: p.coast_y + p.coast_amp * np.sin(x / p.coast_wavelength)


def _elevation(p: SynthParams):
    yc = _coast(p)

    def fn(x, y):
        d = y - yc(x)
        return np.where(d < 0, np.maximum(-p.shelf_depth, d * p.sea_slope), d * p.land_slope)
    return fn


def _storms(p: SynthParams, proj, rng) -> list:
    yc = _coast(p)
    specs = []
    plans = {3: p.cat3_dp, 4: p.cat4_dp}
    for cat, dps in plans.items():
        for tide in (0.0, p.tide_ft):
            for k, dp in enumerate(dps):
                x0 = (-20000.0, 0.0, 18000.0)[k] + rng.uniform(-2000, 2000)
                lon, lat = proj.to_lonlat(x0, yc(x0))
                specs.append(StormSpec(dp, 25.0 + 5.0 * k, float(rng.uniform(-10, 15)), 5.0,
                                       float(lon), float(lat), cat, tide,
                                       f"c{cat}_t{tide:g}_{k}", p.landfall_hour, p.track_duration_h))
    return specs


def _dem(p: SynthParams, sc: SynthScale, basin, rng) -> DemRaster:
    proj = basin.projection
    reach = basin.bounding_radius() + 2000.0
    lon0, lat0 = proj.to_lonlat(-reach, -reach)
    lon1, lat1 = proj.to_lonlat(reach, reach)
    cs = sc.dem_cellsize
    xll, yll = round(float(lon0), 3), round(float(lat0), 3)
    nc = int(math.ceil((lon1 - xll) / cs))
    nr = int(math.ceil((lat1 - yll) / cs))
    lon = xll + (np.arange(nc) + 0.5) * cs
    lat = yll + (nr - 1 - np.arange(nr) + 0.5) * cs
    x, y = proj.to_xy(*np.meshgrid(lon, lat))
    z = _elevation(p)(x, y) + rng.normal(0.0, 0.05, x.shape)
    # an enclosed inland bowl below sea level that only pluvial water could reach
    d = y - _coast(p)(x)
    bowl = np.hypot(x + 15000.0, d - 16000.0) / 3000.0
    z = np.where(bowl < 1, np.minimum(z, -0.5 + 3.5 * bowl ** 2), z)
    sea = (d < -1500.0) & (z <= 0)
    z = np.round(z, 3)
    z[sea] = np.minimum(z[sea], 0.0)
    return DemRaster(z, xll, yll, cs, sea)


def _zones(p: SynthParams, sc: SynthScale, proj, rng) -> list:
    xs = np.linspace(-55000.0, 55000.0, sc.zone_cols + 1)
    ys = np.linspace(p.coast_y - 10000.0, p.coast_y + 40000.0, sc.zone_rows + 1)
    gx, gy = np.meshgrid(xs, ys)
    jx = 0.15 * (xs[1] - xs[0])
    jy = 0.15 * (ys[1] - ys[0])
    gx[1:-1, 1:-1] += rng.uniform(-jx, jx, gx[1:-1, 1:-1].shape)
    gy[1:-1, 1:-1] += rng.uniform(-jy, jy, gy[1:-1, 1:-1].shape)
    lon, lat = proj.to_lonlat(gx, gy)
    lon, lat = np.round(lon, 6), np.round(lat, 6)
    zones = []
    for r in range(sc.zone_rows):
        for c in range(sc.zone_cols):
            ring = [(lon[r, c], lat[r, c]), (lon[r, c + 1], lat[r, c + 1]),
                    (lon[r + 1, c + 1], lat[r + 1, c + 1]), (lon[r + 1, c], lat[r + 1, c])]
            ring = [(float(a), float(b)) for a, b in ring]
            geom = shapely.Polygon(ring)
            if (r, c) == (sc.zone_rows // 2, sc.zone_cols // 2):
                # a lake inside one zone
                cx, cy = geom.centroid.x, geom.centroid.y
                w, h = 0.15 * (lon[r, c + 1] - lon[r, c]), 0.15 * (lat[r + 1, c] - lat[r, c])
                hole = [(cx - w, cy - h), (cx - w, cy + h), (cx + w, cy + h), (cx + w, cy - h)]
                geom = shapely.Polygon(ring, [[(round(a, 6), round(b, 6)) for a, b in hole]])
            zones.append(ZoneRecord(f"Z{r:02d}{c:02d}", geom))
    return zones


def _sfha(p: SynthParams, proj) -> list:
    x = np.linspace(-65000.0, 65000.0, 131)
    yc = _coast(p)(x)
    lower = proj.to_lonlat(x, yc - 3000.0)
    upper = proj.to_lonlat(x[::-1], (yc + 2500.0 + 1500.0 * np.sin(x / 6000.0))[::-1])
    ring = np.round(np.column_stack([np.r_[lower[0], upper[0]], np.r_[lower[1], upper[1]]]), 6)
    polys = [shapely.Polygon(ring)]
    for cx in (-30000.0, 5000.0, 35000.0):  # inland floodplain strips
        y0 = float(_coast(p)(cx)) + 2000.0
        lo = proj.to_lonlat([cx - 1200.0, cx + 1200.0], [y0, y0 + 12000.0])
        b = np.round(np.array(lo), 6)
        polys.append(shapely.box(b[0, 0], b[1, 0], b[0, 1], b[1, 1]))
    return [shapely.orient_polygons(g) for g in polys]


def _demographics(zones, rng) -> list:
    out = []
    for z in zones:
        pop = float(np.round(rng.lognormal(math.log(12000), 0.6)))
        hv = float(np.round(rng.lognormal(math.log(180000), 0.35), -2))
        inc = float(np.round(rng.lognormal(math.log(52000), 0.3), -2))
        shares = rng.dirichlet([1.0, 3.0, 9.0, 2.0])* 100
        out.append(DemographicRecord(
            z.zone_id, pop, hv, float(np.round(hv * 0.0065)), float(np.round(rng.uniform(18, 32), 1)),
            float(np.round(rng.uniform(700, 1400))), inc, float(np.round(rng.uniform(30, 48), 1)),
            float(np.round(rng.uniform(45, 85), 1)), float(np.round(rng.uniform(0, 20), 1)),
            float(np.round(shares[0], 1)), float(np.round(shares[1], 1)), float(np.round(shares[2], 1)),
            float(np.round(shares[3], 1)), float(np.round(rng.uniform(8, 30), 1)),
            None if rng.random() < 0.05 else float(np.round(rng.uniform(5, 25), 1))))
    return out


def _banks(rng, n=12) -> list:
    out = []
    for k in range(1, n + 1):
        assets = float(np.round(rng.lognormal(math.log(20000), 1.2), 1))
        for q in ("2012Q1", "2013Q1"):
            a = float(np.round(assets * rng.uniform(0.95, 1.08), 1))
            out.append(BankRecord(f"B{k:02d}", q, a, float(np.round(a * rng.uniform(0.001, 0.004), 2)),
                                  float(np.round(a * rng.uniform(0.08, 0.12), 1)),
                                  float(np.round(a * rng.uniform(0.5, 0.7), 1)),
                                  float(np.round(a * rng.uniform(0.6, 0.8), 1)),
                                  float(np.round(a * rng.uniform(0.1, 0.3), 1))))
    return out


def _sweep(amounts: np.ndarray, target: float) -> int:
    """Smallest prefix whose dollar share reaches ``target``."""
    cum = np.cumsum(amounts)
    return int(np.searchsorted(cum, target * cum[-1], side="left")) + 1 if len(cum) else 0


def _loans(p: SynthParams, sc: SynthScale, demo, flag: dict, rng) -> list:
    pops = np.array([d.population for d in demo])
    lam = np.clip(sc.loans_per_zone_year * pops / pops.mean(), 2, 4 * sc.loans_per_zone_year)
    banks = [f"B{k:02d}" for k in range(1, 14)]  # B13 has no balance-sheet record
    nonbanks = [f"N{k:02d}" for k in range(1, 9)]
    rows = []
    for year in sc.years:
        for d, l in zip(demo, lam):
            n = rng.poisson(l)
            if n == 0:
                continue
            amount = np.round(rng.lognormal(math.log(190000), 0.55, n)).astype(np.int64)
            amount = np.maximum(amount, 5000)
            value = np.round(amount / rng.uniform(0.6, 0.97, n)).astype(np.int64)
            lien = np.where(rng.random(n) < 0.08, "other", "first")
            occ = np.where(rng.random(n) < 0.1, "other", "owner")
            doc = rng.choice(["full", "low", "nina"], n, p=[0.7, 0.22, 0.08])
            nb = rng.random(n) < p.nonbank_share
            lender = np.where(nb, rng.choice(nonbanks, n), rng.choice(banks, n))
            for k in range(n):
                rows.append(dict(year=year, zone_id=d.zone_id, amount=int(amount[k]),
                                 agency=bool(rng.random() < 0.6), lien=str(lien[k]), occupancy=str(occ[k]),
                                 property_value=int(value[k]), io=bool(rng.random() < p.io_base),
                                 fixed_rate=bool(rng.random() < 0.85), doc_type=str(doc[k]),
                                 lender_id=str(lender[k]), lender_kind="nonbank" if nb[k] else "bank"))
    # exact IO dollar shares on the analysed (filtered) subset, per year and side
    probe = [LoanRecord(**r) for r in rows]
    keep = {id(l) for l in filter_loans_mcdash(probe)}
    groups: dict = {}
    for r, l in zip(rows, probe):
        if id(l) in keep:
            groups.setdefault((r["year"], bool(flag.get(r["zone_id"], False))), []).append(r)
    for (year, inside), grp in sorted(groups.items()):
        order = rng.permutation(len(grp))
        amounts = np.array([grp[i]["amount"] for i in order], dtype=float)
        cut = _sweep(amounts, p.io_base + (p.io_gap if inside else 0.0))
        for j, i in enumerate(order):
            grp[i]["io"] = j < cut
    return [LoanRecord(**r) for r in rows]


def _panel(p: SynthParams, sc: SynthScale, zones, surge15: dict, rng) -> list:
    years = sc.panel_years
    national = np.cumsum(rng.normal(0.0, 0.01, len(years)))
    rows = []
    for z in zones:
        fx_p, fx_r = rng.normal(0, 0.05), rng.normal(0, 0.1)
        drift = p.p2r_drift if surge15.get(z.zone_id, False) else 0.0
        for k, year in enumerate(years):
            zy = rng.normal(0, 0.02)
            for month in range(1, 13):
                t = k + (month - 1) / 12.0
                lr = 7.0 + 0.02 * t + fx_r + rng.normal(0, 0.005)
                lp2r = 2.8 + national[k] + fx_p + drift * k + zy + rng.normal(0, 0.01)
                rows.append((z.zone_id, year, month, float(np.round(100 * math.exp(lp2r + lr - 9.8), 6)),
                             float(np.round(100 * math.exp(lr - 7.0), 6))))
    return rows


def synth_generate(seed: int = 0, scale: str = "small", params: SynthParams = SynthParams()) -> SynthBundle:
    """Build a mutually consistent bundle; the same seed gives identical records."""
    from .pipeline import Dataset, build_classification

    if scale not in SCALES:
        raise ValueError(f"scale must be one of {sorted(SCALES)}, got {scale!r}")
    sc = SCALES[scale]
    rng = np.random.default_rng(seed)
    basin = uniform_basin("synth", POLE, sc.r_inner, sc.dr, sc.n_rings, sc.n_sectors, _elevation(params))
    proj = basin.projection
    storms = _storms(params, proj, rng)
    dem = _dem(params, sc, basin, rng)
    zones = _zones(params, sc, proj, rng)
    sfha = _sfha(params, proj)
    demo = _demographics(zones, rng)
    banks = _banks(rng)
    cfg = PipelineConfig(seed=seed, sim_duration_h=params.sim_duration_h, landfall_hour=params.landfall_hour,
                         track_duration_h=params.track_duration_h, lender_years=tuple(range(2012, 2019)))
    ds = Dataset([basin], [s.to_storm() for s in storms], zones, dem, sfha, demographics=demo)
    cls, _ = build_classification(cfg, ds)
    loans = _loans(params, sc, demo, cls.flag_map(cfg.primary_flag), rng)
    panel = _panel(params, sc, zones, cls.flag_map(cfg.surge_flag(cfg.regression_threshold_ft)), rng)
    return SynthBundle(seed, scale, basin, storms, dem, zones, sfha, loans, banks, demo, panel, cfg, cls)
