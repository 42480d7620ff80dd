"""Per-zone classification table fusing surge, floodplain and SLR layers."""
from __future__ import annotations

import csv
import operator
from dataclasses import dataclass, field

DEFAULT_THRESHOLDS = (5.0, 10.0, 15.0, 20.0)
COMPARATORS = {"ge": operator.ge, "gt": operator.gt}
MISSING = "NA"


def _num(t) -> str:
    return f"{t:g}"


def surge_column(threshold, category, tide) -> str:
    return f"surge{_num(threshold)}_cat{category}_{tide}"


def max_surge_column(category, tide) -> str:
    return f"max_surge_cat{category}_{tide}"


def slr_column(level) -> str:
    return f"slr{_num(level)}"


@dataclass(frozen=True)
class ZoneClassification:
    zone_id: str
    max_surge_ft: dict  # (category, tide) -> ft, None when uncovered
    flags: dict  # column name -> bool, None when undefined
    sfha_share: float | None
    covered: bool
    population: float = 0.0
    missing: tuple = ()

    def flag(self, name) -> bool:
        """Flag value with undefined treated as out of zone."""
        if name not in self.flags:
            raise KeyError(f"unknown flag column {name!r}")
        return bool(self.flags[name])


@dataclass
class ClassificationTable:
    records: dict  # zone_id -> ZoneClassification, insertion order = sorted ids
    surge_columns: list
    flag_columns: list
    thresholds: tuple
    comparator: str
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records.values())

    def __getitem__(self, zone_id):
        return self.records[zone_id]

    def __contains__(self, zone_id):
        return zone_id in self.records

    def zone_ids(self):
        return list(self.records)

    def flag_map(self, name) -> dict:
        return {z: r.flag(name) for z, r in self.records.items()}

    def count(self, name) -> int:
        return sum(r.flag(name) for r in self)

    @property
    def columns(self):
        return ["zone_id", "covered", "missing", "population", "sfha_share",
                *self.surge_columns, *self.flag_columns]

    def to_rows(self):
        for r in self:
            row = {"zone_id": r.zone_id, "covered": int(r.covered),
                   "missing": ";".join(r.missing), "population": _fmt(r.population),
                   "sfha_share": _fmt(r.sfha_share)}
            for (cat, tide), v in r.max_surge_ft.items():
                row[max_surge_column(cat, tide)] = _fmt(v)
            for name in self.flag_columns:
                v = r.flags.get(name)
                row[name] = MISSING if v is None else int(v)
            yield row

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=self.columns)
            w.writeheader()
            w.writerows(self.to_rows())


def _fmt(v):
    if v is None:
        return MISSING
    return repr(float(v))


def classify(surge_table: dict, sfha_shares: dict, slr_flags: dict,
             thresholds=DEFAULT_THRESHOLDS, category=None, tide=None, comparator: str = "ge",
             population: dict | None = None) -> ClassificationTable:
    """Build the zone classification.

    ``surge_table`` maps ``(category, tide_label)`` to ``{zone_id: max surge ft or None}``;
    ``category``/``tide`` restrict which scenarios are emitted. ``sfha_shares`` maps
    zone ids to floodplain area shares and ``slr_flags`` maps an SLR level in feet to
    ``{zone_id: bool}``. Zones absent from any input are kept with ``covered=False``
    and the names of the missing inputs. Passing ``None`` for the floodplain or
    SLR layer marks that whole layer unavailable: its flags are undefined for
    every zone without affecting coverage.
    """
    if comparator not in COMPARATORS:
        raise ValueError(f"comparator must be one of {sorted(COMPARATORS)}")
    cmp = COMPARATORS[comparator]
    thresholds = tuple(sorted(float(t) for t in thresholds))
    scenarios = sorted(k for k in surge_table
                       if (category is None or k[0] == category) and (tide is None or k[1] == tide))
    if not scenarios:
        raise ValueError(f"no surge scenario matches category={category} tide={tide}")
    population = population or {}
    unavailable = [name for name, layer in (("sfha", sfha_shares), ("slr", slr_flags)) if layer is None]
    sfha_on = sfha_shares is not None
    sfha_shares = sfha_shares or {}
    slr_flags = slr_flags or {}
    ids = set(sfha_shares)
    for k in scenarios:
        ids |= set(surge_table[k])
    for lv in slr_flags:
        ids |= set(slr_flags[lv])
    slr_levels = sorted(slr_flags)
    surge_cols = [max_surge_column(c, t) for c, t in scenarios]
    flag_cols = [surge_column(th, c, t) for c, t in scenarios for th in thresholds]
    flag_cols += ["sfha_any", "sfha_majority"] + [slr_column(lv) for lv in slr_levels]

    records = {}
    for zid in sorted(ids):
        missing, flags, surge = [], {}, {}
        for c, t in scenarios:
            tab = surge_table[(c, t)]
            if zid not in tab:
                missing.append(f"surge_cat{c}_{t}")
            v = tab.get(zid)
            if v is not None and not v >= 0:
                raise ValueError(f"zone {zid}: negative or NaN surge {v}")
            surge[(c, t)] = v
            for th in thresholds:
                flags[surge_column(th, c, t)] = None if v is None else bool(cmp(v, th))
        share = sfha_shares.get(zid)
        if sfha_on and zid not in sfha_shares:
            missing.append("sfha")
        elif share is not None and not 0.0 <= share <= 1.0:
            raise ValueError(f"zone {zid}: SFHA share {share} outside [0, 1]")
        flags["sfha_any"] = None if share is None else share > 0.0
        flags["sfha_majority"] = None if share is None else share > 0.5
        for lv in slr_levels:
            if zid not in slr_flags[lv]:
                missing.append(slr_column(lv))
            v = slr_flags[lv].get(zid)
            flags[slr_column(lv)] = None if v is None else bool(v)
        covered = not missing and all(v is not None for v in surge.values())
        records[zid] = ZoneClassification(zid, surge, flags, share, covered,
                                          float(population.get(zid, 0.0)), tuple(missing))
    diag = {"zones": len(records), "uncovered": sum(not r.covered for r in records.values()),
            "with_missing_inputs": sum(bool(r.missing) for r in records.values()),
            "unavailable": unavailable}
    return ClassificationTable(records, surge_cols, flag_cols, thresholds, comparator, diag)


def read_classification_csv(path) -> ClassificationTable:
    """Inverse of ``ClassificationTable.to_csv``."""
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        cols = rd.fieldnames or []
        rows = list(rd)
    fixed = {"zone_id", "covered", "missing", "population", "sfha_share"}
    surge_cols = [c for c in cols if c.startswith("max_surge_cat")]
    flag_cols = [c for c in cols if c not in fixed and c not in surge_cols]

    def num(s):
        return None if s in (MISSING, "") else float(s)

    records, thresholds = {}, set()
    for row in rows:
        surge = {}
        for c in surge_cols:
            cat, tide = c[len("max_surge_cat"):].split("_", 1)
            surge[(int(cat), tide)] = num(row[c])
        flags = {c: (None if row[c] in (MISSING, "") else row[c] == "1") for c in flag_cols}
        zid = row["zone_id"]
        records[zid] = ZoneClassification(
            zid, surge, flags, num(row["sfha_share"]), row["covered"] == "1",
            num(row["population"]) or 0.0, tuple(m for m in row["missing"].split(";") if m))
    for c in flag_cols:
        if c.startswith("surge"):
            thresholds.add(float(c[5:].split("_")[0]))
    return ClassificationTable(records, surge_cols, flag_cols, tuple(sorted(thresholds)), "unknown")


def write_zone_surge_csv(path, table: ClassificationTable, slr_levels=(3, 6)):
    """Long format: zone_id, category, tide, max_surge_ft, sfha_share, slr flags, covered."""
    cols = ["zone_id", "category", "tide", "max_surge_ft", "sfha_share"]
    cols += [f"slr{_num(lv)}_flag" for lv in slr_levels] + ["covered_flag"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in table:
            for (cat, tide), v in r.max_surge_ft.items():
                slr = [r.flags.get(slr_column(lv)) for lv in slr_levels]
                w.writerow([r.zone_id, cat, tide, _fmt(v), _fmt(r.sfha_share),
                            *[MISSING if s is None else int(s) for s in slr], int(r.covered)])
