"""End-to-end run: surge fields -> zone classification -> exposure tables -> trend regressions."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..econometrics import fit, panel_from_indices, trend_slope, write_trend_csv
from ..exposure import (demographics_by_zone, feature_shares_by_zone, filter_loans_mcdash,
                        lender_ratios_by_zone, originations_by_zone_year)
from ..geo_index import (SfhaLayer, basin_cells, load_dem, load_polygons_geojson, load_zones_geojson,
                         merge_joins, slr_inundation, surge_above_ground, zone_cell_join,
                         zone_inundation_flags, zone_max_surge)
from ..geo_index.zonegeom import GeometryError
from ..surge_sim import SimConfig, group_moms, run_storm_meow
from ..zones import classify, write_zone_surge_csv
from .config import PipelineConfig
from .formats import (Diagnostic, ValidationError, read_banks, read_basin, read_demographics,
                      read_loans, read_panel, read_storms, write_diagnostics, write_field)


class PipelineError(RuntimeError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


@dataclass
class Dataset:
    basins: list
    storms: list
    zones: list
    dem: object = None
    sfha: list | None = None
    loans: list = field(default_factory=list)
    banks: list = field(default_factory=list)
    demographics: list = field(default_factory=list)
    panel: list = field(default_factory=list)


@dataclass
class RunState:
    cfg: PipelineConfig
    out: Path
    diagnostics: list = field(default_factory=list)
    outputs: dict = field(default_factory=dict)  # relative name -> path
    unavailable: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def note(self, stage, message, severity="warning", file="", line=0):
        self.diagnostics.append(Diagnostic(file, line, message, severity, stage))

    def path(self, name) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.outputs[name] = p
        return p


def _exists(p):
    return p is not None and Path(p).exists()


def parse_inputs(cfg: PipelineConfig, state: RunState | None = None,
                 need=("basins", "storms", "zones")) -> Dataset:
    """Read and validate every configured input; optional layers may be absent."""
    diags = state.diagnostics if state is not None else []

    def take(res, stage="parse"):
        res.check(cfg.max_bad_fraction)
        diags.extend(res.diagnostics)
        return res.records

    for key in need:
        val = getattr(cfg, key)
        if not val or (key != "basins" and not _exists(val)):
            raise ValidationError(f"required input '{key}' missing: {val}")
    basins = [read_basin(p) for p in cfg.basins]
    ids = [b.basin_id for b in basins]
    if len(set(ids)) != len(ids):
        raise ValidationError(f"duplicate basin ids {ids}")
    storms = take(read_storms(cfg.storms, cfg.landfall_hour, cfg.track_duration_h)) if _exists(cfg.storms) else []
    zones = load_zones_geojson(cfg.zones) if _exists(cfg.zones) else []
    dem = load_dem(cfg.dem, cfg.sea_mask) if _exists(cfg.dem) and _exists(cfg.sea_mask) else None
    sfha = load_polygons_geojson(cfg.sfha) if _exists(cfg.sfha) else None
    ds = Dataset(basins, storms, zones, dem, sfha)
    if _exists(cfg.loans):
        ds.loans = take(read_loans(cfg.loans))
    if _exists(cfg.banks):
        ds.banks = take(read_banks(cfg.banks))
    if _exists(cfg.demographics):
        ds.demographics = take(read_demographics(cfg.demographics))
    if _exists(cfg.panel):
        ds.panel = take(read_panel(cfg.panel))
    return ds


# surge and classification building blocks (also used by the synthetic generator)

def simulate_moms(basins, storms, sim: SimConfig, notes=None) -> dict:
    """basin_id -> {(category, tide_ft): MomField}; storms missing a basin are skipped."""
    out = {}
    for b in basins:
        meows = []
        for s in storms:
            try:
                meows.append(run_storm_meow(b, s, sim))
            except ValueError as exc:
                if "never enters" not in str(exc):
                    raise
                if notes is not None:
                    notes.append(str(exc))
        out[b.basin_id] = group_moms(meows) if meows else {}
    return out


def zone_surge_table(basins, moms: dict, zones, dem=None, notes=None) -> dict:
    """(category, tide label) -> {zone_id: max surge ft or None}. Zones that fail
    geometry validation are left out so they classify as missing."""
    joins = []
    for b in basins:
        cells = basin_cells(b)
        joins.append(zone_cell_join(zones, cells))
    join = merge_joins(*joins)
    if notes is not None:
        for zid, msg in sorted(join.errors.items()):
            notes.append(f"zone {zid}: {msg}")
    by_basin = {b.basin_id: b for b in basins}
    scenarios = sorted({(m.category, m.tide) for per in moms.values() for m in per.values()})
    table = {}
    for cat, tide in scenarios:
        fields = {}
        for bid, per in moms.items():
            for mom in per.values():
                if mom.category == cat and mom.tide == tide:
                    fields[bid] = surge_above_ground(mom, by_basin[bid], dem)
        table[(cat, tide)] = {z.zone_id: zone_max_surge(z.zone_id, fields, join)
                              for z in zones if z.zone_id not in join.errors}
    return table


def sfha_shares(zones, polygons, notes=None):
    if polygons is None:
        return None
    layer = SfhaLayer(polygons)
    out = {}
    for z in zones:
        try:
            out[z.zone_id] = layer.share(z)
        except GeometryError as exc:
            if notes is not None:
                notes.append(f"zone {z.zone_id}: {exc}")
    return out


def slr_zone_flags(zones, dem, levels):
    if dem is None:
        return None
    return {lv: zone_inundation_flags(zones, dem, slr_inundation(dem, lv)) for lv in levels}


def build_classification(cfg: PipelineConfig, ds: Dataset, notes=None, moms=None):
    sim = SimConfig(duration_h=cfg.sim_duration_h)
    moms = simulate_moms(ds.basins, ds.storms, sim, notes) if moms is None else moms
    table = zone_surge_table(ds.basins, moms, ds.zones, ds.dem, notes)
    if (cfg.category, cfg.tide) not in table:
        raise ValidationError(f"no storms of category {cfg.category} at {cfg.tide} tide reach any basin")
    pop = {r.zone_id: r.population for r in ds.demographics}
    cls = classify(table, sfha_shares(ds.zones, ds.sfha, notes), slr_zone_flags(ds.zones, ds.dem, cfg.slr_levels),
                   cfg.thresholds, comparator=cfg.comparator, population=pop)
    return cls, moms


# stages

def _stage(state, name, fn, *args):
    try:
        return fn(*args)
    except Exception as exc:
        state.note(name, f"{type(exc).__name__}: {exc}", "fatal")
        raise PipelineError(name, exc) from exc


def _write_moms(state, ds, moms):
    by_id = {b.basin_id: b for b in ds.basins}
    for bid, per in moms.items():
        for (cat, tide_ft), mom in per.items():
            write_field(state.path(f"mom/{bid}_cat{cat}_{mom.tide}.mom"), mom, by_id[bid])


def stage_classify(state: RunState, ds: Dataset):
    notes = []
    cls, moms = build_classification(state.cfg, ds, notes)
    for msg in notes:
        state.note("classify", msg)
    _write_moms(state, ds, moms)
    cls.to_csv(state.path("classification.csv"))
    write_zone_surge_csv(state.path("zone_surge.csv"), cls, state.cfg.slr_levels)
    state.unavailable += [f"layer:{u}" for u in cls.diagnostics["unavailable"]]
    state.summary["zones"] = cls.diagnostics["zones"]
    state.summary["uncovered_zones"] = cls.diagnostics["uncovered"]
    return cls


def _flag_available(cls, name):
    return name in cls.flag_columns and any(r.flags.get(name) is not None for r in cls)


def stage_exposure(state: RunState, ds: Dataset, cls):
    cfg = state.cfg
    primary = cfg.primary_flag
    slr = [f"slr{lv:g}" for lv in cfg.slr_levels]
    for flag in [primary, "sfha_any", *slr]:
        name = f"table1_{flag}.csv"
        if not _flag_available(cls, flag):
            state.unavailable.append(name)
            continue
        t = originations_by_zone_year(ds.loans, cls, flag, decimals=cfg.table1_decimals)
        if t.diagnostics["unmatched_zone_loans"]:
            state.note("exposure", f"{t.diagnostics['unmatched_zone_loans']} loans reference unknown zones "
                                   f"{t.diagnostics['unmatched_zone_ids'][:10]}")
        t.to_csv(state.path(name))
    mcdash = filter_loans_mcdash(ds.loans)
    ft = feature_shares_by_zone(mcdash, cls, primary, decimals=cfg.table2_decimals)
    ft.to_csv(state.path(f"table2_{primary}.csv"))
    ft.series_to_csv(state.path(f"figure3_{primary}.csv"))
    io = {side: sum(r.amounts["io"] for r in ft.rows if r.side == side) for side in ("in", "out")}
    tot = {side: sum(r.total for r in ft.rows if r.side == side) for side in ("in", "out")}
    state.summary["io_share_in_zone"] = io["in"] / tot["in"] if tot["in"] else None
    state.summary["io_share_other"] = io["out"] / tot["out"] if tot["out"] else None
    state.summary["mcdash_loans"] = len(mcdash)

    if ds.demographics:
        cols = {f"surge{t:g}": cfg.surge_flag(t) for t in cfg.table3_thresholds if t in cfg.thresholds}
        if _flag_available(cls, "sfha_any"):
            cols["sfha"] = "sfha_any"
        else:
            state.unavailable.append("table3_demographics.csv:sfha")
        demographics_by_zone(ds.demographics, cls, cols).to_csv(state.path("table3_demographics.csv"))
    else:
        state.unavailable.append("table3_demographics.csv")
    if ds.banks:
        flags = [cfg.surge_flag(t) for t in cfg.table4_thresholds if t in cfg.thresholds]
        if _flag_available(cls, "sfha_any"):
            flags.append("sfha_any")
        else:
            state.unavailable.append("table4_lenders.csv:sfha")
        lt = lender_ratios_by_zone(ds.loans, ds.banks, cls, flags, cfg.bank_quarter, cfg.lender_years)
        for f, v in lt.unmatched_bank_volume.items():
            if v:
                state.note("exposure", f"{f}: ${v} of bank-lender volume has no {cfg.bank_quarter} record "
                                       f"({', '.join(lt.unmatched_lenders[f][:10])})")
        lt.to_csv(state.path("table4_lenders.csv"))
    else:
        state.unavailable.append("table4_lenders.csv")


def stage_regress(state: RunState, ds: Dataset, cls):
    cfg = state.cfg
    if not ds.panel:
        state.unavailable += ["regression_log_price_to_rent.csv", "regression_log_rent.csv", "figure4.csv"]
        return
    sflag = cfg.surge_flag(cfg.regression_threshold_ft)
    surge = cls.flag_map(sflag)
    sfha = cls.flag_map("sfha_majority") if _flag_available(cls, "sfha_majority") else {}
    known = set(cls.zone_ids())
    rows = [r for r in ds.panel if r[0] in known]
    if len(rows) < len(ds.panel):
        state.note("regress", f"{len(ds.panel) - len(rows)} panel rows reference unknown zones")
    panel = panel_from_indices(rows, surge, sfha)
    results = {}
    for outcome in ("log_price_to_rent", "log_rent"):
        res = fit(panel, outcome, cfg.base_year, cov_type=cfg.cov_type)
        if res.dropped:
            state.note("regress", f"{outcome}: dropped all-zero columns {res.dropped}")
        if res.psd_fixed:
            state.note("regress", f"{outcome}: clustered covariance not PSD; eigenvalues floored at zero")
        if res.degenerate:
            state.note("regress", f"{outcome}: cluster dimension(s) {res.degenerate} absorbed by the design")
        res.to_csv(state.path(f"regression_{outcome}.csv"))
        results[outcome] = res
    write_trend_csv(state.path("figure4.csv"), results)
    est, se, lo, hi = trend_slope(results["log_price_to_rent"], "surge15")
    state.summary["surge15_p2r_slope"] = est
    state.summary["surge15_p2r_slope_ci"] = [lo, hi]


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest(state: RunState):
    cfg = state.cfg
    inputs = {}
    for key in ("storms", "dem", "sea_mask", "zones", "sfha", "loans", "banks", "demographics", "panel"):
        p = getattr(cfg, key)
        inputs[key] = {"file": Path(p).name, "sha256": sha256(p)} if _exists(p) else None
    inputs["basins"] = [{"file": Path(p).name, "sha256": sha256(p)} for p in cfg.basins]
    settings = {k: getattr(cfg, k) for k in ("thresholds", "category", "tide", "comparator", "seed",
                                             "table1_decimals", "table2_decimals", "slr_levels",
                                             "sim_duration_h", "bank_quarter", "primary_threshold_ft",
                                             "regression_threshold_ft",
                                             "cov_type")}
    outputs = {name: sha256(p) for name, p in sorted(state.outputs.items())}
    return {"package_version": __version__, "settings": settings, "inputs": inputs,
            "outputs": outputs, "unavailable": sorted(set(state.unavailable))}


def _finish(state: RunState):
    state.path("summary.json").write_text(json.dumps(state.summary, indent=2, sort_keys=True) + "\n")
    write_diagnostics(state.path("diagnostics.jsonl"), state.diagnostics)
    (state.out / "manifest.json").write_text(json.dumps(_manifest(state), indent=2, sort_keys=True) + "\n")


STAGES = {"classify": ("classify",), "exposure": ("classify", "exposure"),
          "regress": ("classify", "regress"), "pipeline": ("classify", "exposure", "regress")}


def run_pipeline(cfg: PipelineConfig, stages=STAGES["pipeline"]) -> RunState:
    out = cfg.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    state = RunState(cfg, out)
    try:
        ds = _stage(state, "parse", parse_inputs, cfg, state)
        cls = _stage(state, "classify", stage_classify, state, ds)
        if "exposure" in stages:
            if not ds.loans:
                state.unavailable.append("exposure:no-loans")
            else:
                _stage(state, "exposure", stage_exposure, state, ds, cls)
        if "regress" in stages:
            _stage(state, "regress", stage_regress, state, ds, cls)
    finally:
        _finish(state)
    return state
