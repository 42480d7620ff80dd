"""Plain-text file grammars: basins, storms, surge fields, loans, banks, demographics, panels.

Every parser returns records plus line-numbered diagnostics. Header problems
are fatal; a bad data row produces exactly one diagnostic and parsing continues.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..econometrics import PanelObservation
from ..exposure import (DEMOGRAPHIC_FIELDS, BankRecord, DemographicRecord, LoanRecord)
from ..surge_sim import BasinGrid, MeowField, MomField, StormParams
from ..units import FT


class ValidationError(ValueError):
    """Input rejected: malformed header, unreadable file or too many bad rows."""


@dataclass(frozen=True)
class Diagnostic:
    file: str
    line: int
    message: str
    severity: str = "error"
    stage: str = "parse"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class ParseResult:
    records: list
    diagnostics: list = field(default_factory=list)
    rows: int = 0

    @property
    def bad_rows(self) -> int:
        return sum(d.severity == "error" for d in self.diagnostics)

    def check(self, max_bad_fraction: float = 0.01):
        if self.rows and self.bad_rows / self.rows >= max_bad_fraction:
            first = self.diagnostics[0]
            raise ValidationError(f"{first.file}: {self.bad_rows} of {self.rows} rows rejected "
                                  f"(limit {max_bad_fraction:.0%}); first at line {first.line}: {first.message}")
        return self


def write_diagnostics(path, diagnostics):
    with open(path, "w") as fh:
        for d in diagnostics:
            fh.write(d.to_json() + "\n")


# value converters

def _bool(s):
    s = s.strip().lower()
    if s in ("1", "true", "t", "yes", "y"):
        return True
    if s in ("0", "false", "f", "no", "n"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _int(s):
    s = s.strip()
    if not s or not s.lstrip("-").isdigit():
        raise ValueError(f"not an integer: {s!r}")
    return int(s)


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"non-finite number: {s!r}")
    return v


def _text(s):
    return s.strip()


def _opt_float(s):
    return None if s.strip() == "" else _float(s)


def _str(s):
    s = s.strip()
    if not s:
        raise ValueError("empty value")
    return s


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


# generic CSV

def read_table(path, columns: dict, build, optional: dict | None = None) -> ParseResult:
    """Parse a headed CSV. ``columns`` maps required names to converters."""
    optional = optional or {}
    name = str(path)
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        try:
            header = [h.strip() for h in next(rd)]
        except StopIteration:
            raise ValidationError(f"{name}: empty file, expected header {','.join(columns)}")
        missing = [c for c in columns if c not in header]
        unknown = [c for c in header if c not in columns and c not in optional]
        if missing or unknown or len(set(header)) != len(header):
            raise ValidationError(f"{name}:1: bad header; expected {','.join(columns)}"
                                  f"{' [+ ' + ','.join(optional) + ']' if optional else ''}, "
                                  f"found {','.join(header)}")
        conv = {**columns, **optional}
        out = ParseResult([])
        for row in rd:
            line = rd.line_num
            if not row or all(not c.strip() for c in row):
                continue
            out.rows += 1
            if len(row) != len(header):
                out.diagnostics.append(Diagnostic(name, line, f"expected {len(header)} fields, found {len(row)}"))
                continue
            try:
                vals = {h: conv[h](v) for h, v in zip(header, row)}
                out.records.append(build(vals))
            except (ValueError, TypeError) as exc:
                out.diagnostics.append(Diagnostic(name, line, str(exc)))
        return out


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


# loans

LOAN_COLUMNS = {"year": _int, "zone_id": _str, "amount": _int, "agency": _bool, "lien": _str,
                "occupancy": _str, "property_value": _int, "io": _bool, "fixed_rate": _bool,
                "doc_type": _str, "lender_id": _text, "lender_kind": _str}


def read_loans(path) -> ParseResult:
    return read_table(path, LOAN_COLUMNS, lambda v: LoanRecord(**v))


def write_loans(path, loans):
    write_table(path, list(LOAN_COLUMNS), ([getattr(ln, c) for c in LOAN_COLUMNS] for ln in loans))


BANK_COLUMNS = {"lender_id": _str, "quarter": _str, "assets": _float, "net_income": _float,
                "equity": _float, "loans": _float, "deposits": _float, "liquid_assets": _float}


def read_banks(path) -> ParseResult:
    return read_table(path, BANK_COLUMNS, lambda v: BankRecord(**v))


def write_banks(path, banks):
    write_table(path, list(BANK_COLUMNS), ([getattr(b, c) for c in BANK_COLUMNS] for b in banks))


DEMO_COLUMNS = {"zone_id": _str, "population": _float, **{f: _opt_float for f in DEMOGRAPHIC_FIELDS}}


def read_demographics(path) -> ParseResult:
    return read_table(path, DEMO_COLUMNS, lambda v: DemographicRecord(**v))


def write_demographics(path, records):
    write_table(path, list(DEMO_COLUMNS), ([getattr(r, c) for c in DEMO_COLUMNS] for r in records))


PANEL_COLUMNS = {"zone_id": _str, "year": _int, "month": _int, "price_index": _float,
                 "rent_index": _float}


def _panel_row(v):
    if not (v["price_index"] > 0 and v["rent_index"] > 0):
        raise ValueError("price and rent indices must be positive")
    if not 1 <= v["month"] <= 12:
        raise ValueError(f"month {v['month']} out of range")
    return (v["zone_id"], v["year"], v["month"], v["price_index"], v["rent_index"])


def read_panel(path) -> ParseResult:
    """Rows of (zone_id, year, month, price_index, rent_index); flags are joined later."""
    return read_table(path, PANEL_COLUMNS, _panel_row)


def write_panel(path, rows):
    write_table(path, list(PANEL_COLUMNS), rows)


# storms

STORM_COLUMNS = {"pressure_deficit_mb": _float, "radius_max_winds_km": _float, "heading_deg": _float,
                 "forward_speed_ms": _float, "landfall_lon": _float, "landfall_lat": _float,
                 "category": _int, "tide_ft": _float}
STORM_OPTIONAL = {"storm_id": _str, "landfall_hour": _float, "duration_h": _float}


@dataclass(frozen=True)
class StormSpec:
    """Landfall parameterisation as stored in the storm file."""

    pressure_deficit_mb: float
    radius_max_winds_km: float
    heading_deg: float
    forward_speed_ms: float
    landfall_lon: float
    landfall_lat: float
    category: int
    tide_ft: float
    storm_id: str
    landfall_hour: float = 12.0
    duration_h: float = 24.0

    def to_storm(self) -> StormParams:
        return StormParams.from_landfall(
            self.pressure_deficit_mb, self.radius_max_winds_km, self.heading_deg, self.forward_speed_ms,
            self.landfall_lon, self.landfall_lat, self.category, self.tide_ft,
            landfall_hour=self.landfall_hour, duration_h=self.duration_h, storm_id=self.storm_id)


def read_storm_specs(path, landfall_hour: float = 12.0, duration_h: float = 24.0) -> ParseResult:
    counter = {"n": 0}

    def build(v):
        counter["n"] += 1
        spec = StormSpec(**{c: v[c] for c in STORM_COLUMNS},
                         storm_id=v.get("storm_id", f"storm{counter['n']:03d}"),
                         landfall_hour=v.get("landfall_hour", landfall_hour),
                         duration_h=v.get("duration_h", duration_h))
        spec.to_storm()  # validates parameters
        return spec

    res = read_table(path, STORM_COLUMNS, build, STORM_OPTIONAL)
    seen = set()
    for s in res.records:
        if s.storm_id in seen:
            raise ValidationError(f"{path}: duplicate storm_id {s.storm_id}")
        seen.add(s.storm_id)
    return res


def read_storms(path, landfall_hour: float = 12.0, duration_h: float = 24.0) -> ParseResult:
    res = read_storm_specs(path, landfall_hour, duration_h)
    return ParseResult([s.to_storm() for s in res.records], res.diagnostics, res.rows)


def write_storms(path, specs):
    cols = [*STORM_COLUMNS, *STORM_OPTIONAL]
    write_table(path, cols, ([getattr(s, c) for c in cols] for s in specs))


# basin grids and surge fields

def _grid_header(basin_id, pole, angular_count, radial_edges):
    return [f"basin_id {basin_id}", f"pole {pole[0]!r} {pole[1]!r}", f"angular_count {angular_count}",
            "radial_edges " + " ".join(repr(float(r)) for r in radial_edges)]


def _write_rows(fh, values, scale=1.0):
    for row in np.asarray(values, dtype=float):
        fh.write(" ".join(repr(float(v) * scale) for v in row) + "\n")


def write_basin(path, basin: BasinGrid):
    fc = np.unique(basin.friction_coeff)
    with open(path, "w") as fh:
        for line in _grid_header(basin.basin_id, basin.pole, basin.angular_count, basin.radial_edges):
            fh.write(line + "\n")
        if fc.size == 1:
            fh.write(f"friction {float(fc[0])!r}\n")
        fh.write("elevation\n")
        _write_rows(fh, basin.cell_elevation)
        if fc.size > 1:
            fh.write("friction_grid\n")
            _write_rows(fh, basin.friction_coeff)


_KEYS = {"basin_id", "pole", "angular_count", "radial_edges", "friction", "field", "units",
         "category", "tide_ft", "storm_id", "members"}


def _read_grid_file(path, data_key):
    name = str(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    head, k = {}, 0
    while k < len(lines) and lines[k].strip() != data_key:
        parts = lines[k].split()
        k += 1
        if not parts:
            continue
        if parts[0] not in _KEYS:
            raise ValidationError(f"{name}:{k}: unknown header key {parts[0]!r}; expected one of "
                                  f"{', '.join(sorted(_KEYS))} or '{data_key}'")
        head[parts[0]] = (k, parts[1:])
    if k >= len(lines):
        raise ValidationError(f"{name}: missing '{data_key}' section line")
    for key in ("basin_id", "pole", "angular_count", "radial_edges"):
        if key not in head:
            raise ValidationError(f"{name}: missing header key '{key}'")
    try:
        pole = tuple(float(v) for v in head["pole"][1])
        na = int(head["angular_count"][1][0])
        edges = np.array([float(v) for v in head["radial_edges"][1]])
    except (ValueError, IndexError) as exc:
        raise ValidationError(f"{name}: malformed grid header ({exc})")
    if len(pole) != 2:
        raise ValidationError(f"{name}:{head['pole'][0]}: pole needs lon and lat")
    nr = len(edges) - 1
    body, extra = [], None
    for j, line in enumerate(lines[k + 1:], start=k + 2):
        if line.strip() == "friction_grid":
            extra = j
            break
        if line.strip():
            body.append((j, line))
    def rows_to_array(rows, what):
        if len(rows) != nr:
            raise ValidationError(f"{name}: expected {nr} {what} rows, found {len(rows)}")
        out = np.empty((nr, na))
        for i, (ln, line) in enumerate(rows):
            parts = line.split()
            if len(parts) != na:
                raise ValidationError(f"{name}:{ln}: expected {na} values, found {len(parts)}")
            try:
                out[i] = [float(v) for v in parts]
            except ValueError as exc:
                raise ValidationError(f"{name}:{ln}: {exc}")
        return out
    values = rows_to_array(body, data_key)
    fgrid = None
    if extra is not None:
        frows = [(j, line) for j, line in enumerate(lines[extra:], start=extra + 1) if line.strip()]
        fgrid = rows_to_array(frows, "friction")
    return head, pole, na, edges, values, fgrid


def read_basin(path) -> BasinGrid:
    head, pole, na, edges, elev, fgrid = _read_grid_file(path, "elevation")
    friction = fgrid if fgrid is not None else (float(head["friction"][1][0]) if "friction" in head else 2.5e-3)
    try:
        return BasinGrid(head["basin_id"][1][0], pole, edges, na, elev, friction)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}")


def write_field(path, fld, basin: BasinGrid):
    """MEOW or MOM in feet above the still-water datum."""
    is_mom = isinstance(fld, MomField)
    with open(path, "w") as fh:
        for line in _grid_header(basin.basin_id, basin.pole, basin.angular_count, basin.radial_edges):
            fh.write(line + "\n")
        fh.write(f"field {'mom' if is_mom else 'meow'}\nunits ft\ncategory {fld.category}\n"
                 f"tide_ft {fld.tide_ft!r}\n")
        if is_mom:
            fh.write("members " + " ".join(fld.members) + "\n")
        else:
            fh.write(f"storm_id {fld.storm_id}\n")
        fh.write("values\n")
        _write_rows(fh, fld.values, 1.0 / FT)


def read_field(path):
    head, pole, na, edges, vals, _ = _read_grid_file(path, "values")
    kind = head.get("field", (0, ["mom"]))[1][0]
    units = head.get("units", (0, ["ft"]))[1][0]
    if units != "ft":
        raise ValidationError(f"{path}: units must be ft, found {units}")
    try:
        cat = int(head["category"][1][0])
        tide = float(head["tide_ft"][1][0])
    except (KeyError, IndexError, ValueError):
        raise ValidationError(f"{path}: field files need category and tide_ft header lines")
    bid = head["basin_id"][1][0]
    metres = vals * FT
    if kind == "mom":
        return MomField(metres, cat, tide, bid, tuple(head.get("members", (0, []))[1]))
    if kind == "meow":
        return MeowField(metres, head.get("storm_id", (0, ["storm"]))[1][0], bid, cat, tide)
    raise ValidationError(f"{path}: field must be meow or mom, found {kind}")
