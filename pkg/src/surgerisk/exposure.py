"""Loan, household and lender aggregation by flood-zone flag."""
from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import asdict, dataclass, field, fields
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction

import numpy as np

DOC_TYPES = ("full", "low", "nina")
LIENS = ("first", "other")
OCCUPANCIES = ("owner", "other")
LENDER_KINDS = ("bank", "nonbank")


@dataclass(frozen=True, slots=True)
class LoanRecord:
    year: int
    zone_id: str
    amount: int  # dollars
    agency: bool = False
    lien: str = "first"
    occupancy: str = "owner"
    property_value: int = 0
    io: bool = False
    fixed_rate: bool = True
    doc_type: str = "full"
    lender_id: str = ""
    lender_kind: str = "bank"

    def __post_init__(self):
        if not isinstance(self.amount, (int, np.integer)) or self.amount <= 0:
            raise ValueError(f"loan amount must be a positive integer, got {self.amount!r}")
        if self.doc_type not in DOC_TYPES:
            raise ValueError(f"doc_type {self.doc_type!r} not in {DOC_TYPES}")
        if self.lien not in LIENS:
            raise ValueError(f"lien {self.lien!r} not in {LIENS}")
        if self.occupancy not in OCCUPANCIES:
            raise ValueError(f"occupancy {self.occupancy!r} not in {OCCUPANCIES}")
        if self.lender_kind not in LENDER_KINDS:
            raise ValueError(f"lender_kind {self.lender_kind!r} not in {LENDER_KINDS}")


def check_years(loans, first: int, last: int):
    bad = [ln for ln in loans if not first <= ln.year <= last]
    if bad:
        raise ValueError(f"{len(bad)} loans outside years {first}-{last}, e.g. {bad[0].year}")


def filter_loans_mcdash(loans, min_amount: int = 50_000, min_value: int = 50_000,
                        min_zone_loans: int = 10) -> list:
    """First-lien owner-occupied loans above the dollar floors, in zones with enough loans."""
    kept = [ln for ln in loans
            if ln.lien == "first" and ln.occupancy == "owner"
            and ln.amount > min_amount and ln.property_value > min_value]
    counts = defaultdict(int)
    for ln in kept:
        counts[ln.zone_id] += 1
    return [ln for ln in kept if counts[ln.zone_id] >= min_zone_loans]


# shares

def exact_share(num: int, den: int):
    """Exact percentage as a Fraction; None when the denominator is zero."""
    if den == 0:
        return None
    return Fraction(100 * int(num), int(den))


def render_share(share, decimals: int):
    if share is None:
        return None
    with localcontext() as ctx:
        ctx.prec = 60
        d = Decimal(share.numerator) / Decimal(share.denominator)
        return d.quantize(Decimal(1).scaleb(-decimals), rounding=ROUND_HALF_EVEN)


def _flag_lookup(classification, flag):
    if hasattr(classification, "flag_map"):
        return classification.flag_map(flag)
    return {z: bool(v) for z, v in classification.items()}


class _Table:
    rows: list

    def to_dicts(self):
        return [r.to_dict() for r in self.rows]

    def to_csv(self, path):
        rows = self.to_dicts()
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["year"])
            w.writeheader()
            w.writerows(rows)


def _cell(v):
    return "" if v is None else str(v)


@dataclass(frozen=True)
class OriginationRow:
    year: int
    total: int
    in_zone: int
    agency_total: int
    agency_in_zone: int
    decimals: int = 2

    @property
    def out_zone(self) -> int:
        return self.total - self.in_zone

    @property
    def share(self):
        return exact_share(self.in_zone, self.total)

    @property
    def agency_share(self):
        return exact_share(self.agency_in_zone, self.agency_total)

    @property
    def share_pct(self):
        return render_share(self.share, self.decimals)

    @property
    def agency_share_pct(self):
        return render_share(self.agency_share, self.decimals)

    def to_dict(self):
        return {"year": self.year, "total_usd": self.total, "in_zone_usd": self.in_zone,
                "in_zone_pct": _cell(self.share_pct), "agency_total_usd": self.agency_total,
                "agency_in_zone_usd": self.agency_in_zone,
                "agency_in_zone_pct": _cell(self.agency_share_pct)}


@dataclass
class OriginationsTable(_Table):
    flag: str
    rows: list
    diagnostics: dict = field(default_factory=dict)

    def by_year(self, year) -> OriginationRow:
        return next(r for r in self.rows if r.year == year)


def originations_by_zone_year(loans, classification, zone_flag: str, years=None,
                              decimals: int = 2) -> OriginationsTable:
    """Yearly origination volume in and out of a flagged zone set (no loan filters)."""
    lookup = _flag_lookup(classification, zone_flag)
    tot, inz, ag, agin = (defaultdict(int) for _ in range(4))
    unmatched, unmatched_ids = 0, set()
    for ln in loans:
        y, a = ln.year, int(ln.amount)
        flag = lookup.get(ln.zone_id)
        if flag is None:
            unmatched += 1
            unmatched_ids.add(ln.zone_id)
            flag = False
        tot[y] += a
        if ln.agency:
            ag[y] += a
        if flag:
            inz[y] += a
            if ln.agency:
                agin[y] += a
    ys = sorted(set(tot) | set(years or ()))
    rows = [OriginationRow(y, tot[y], inz[y], ag[y], agin[y], decimals) for y in ys]
    diag = {"unmatched_zone_loans": unmatched, "unmatched_zone_ids": sorted(unmatched_ids)}
    return OriginationsTable(zone_flag, rows, diag)


FEATURES = ("io", "fixed_rate", "full_doc", "nina")


def _loan_features(ln):
    return (ln.io, ln.fixed_rate, ln.doc_type == "full", ln.doc_type == "nina")


@dataclass(frozen=True)
class FeatureRow:
    year: int
    side: str  # "in" or "out"
    total: int
    amounts: dict  # feature -> dollars
    decimals: int = 1

    def share(self, feature):
        return exact_share(self.amounts[feature], self.total)

    def share_pct(self, feature):
        return render_share(self.share(feature), self.decimals)

    def to_dict(self):
        d = {"year": self.year, "zone": self.side, "total_usd": self.total}
        for f in FEATURES:
            d[f"{f}_usd"] = self.amounts[f]
            d[f"{f}_pct"] = _cell(self.share_pct(f))
        return d


@dataclass
class FeatureTable(_Table):
    flag: str
    rows: list
    diagnostics: dict = field(default_factory=dict)

    def get(self, year, side) -> FeatureRow:
        return next(r for r in self.rows if r.year == year and r.side == side)

    def series(self):
        """Long (year, zone, feature, share) records for plotting."""
        return [{"year": r.year, "zone": r.side, "feature": f, "share_pct": _cell(r.share_pct(f))}
                for r in self.rows for f in FEATURES]

    def series_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["year", "zone", "feature", "share_pct"])
            w.writeheader()
            w.writerows(self.series())


def feature_shares_by_zone(loans, classification, zone_flag: str, decimals: int = 1) -> FeatureTable:
    """Dollar-weighted complex-feature shares per year, in-zone vs other zones."""
    lookup = _flag_lookup(classification, zone_flag)
    tot = defaultdict(int)
    amt = defaultdict(lambda: [0, 0, 0, 0])
    unmatched = set()
    for ln in loans:
        flag = lookup.get(ln.zone_id)
        if flag is None:
            unmatched.add(ln.zone_id)
        key = (ln.year, "in" if flag else "out")
        a = int(ln.amount)
        tot[key] += a
        acc = amt[key]
        for k, on in enumerate(_loan_features(ln)):
            if on:
                acc[k] += a
    years = sorted({y for y, _ in tot})
    rows = [FeatureRow(y, s, tot[(y, s)], dict(zip(FEATURES, amt[(y, s)])), decimals)
            for y in years for s in ("in", "out")]
    return FeatureTable(zone_flag, rows, {"unmatched_zone_ids": sorted(unmatched)})


# weighted statistics

def weighted_median(values, weights) -> float:
    """Lower weighted median: smallest v whose cumulative weight reaches half the total."""
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.shape != w.shape or v.ndim != 1:
        raise ValueError("values and weights must be 1-D arrays of equal length")
    if (w < 0).any() or not np.isfinite(w).all():
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if not total > 0:
        raise ValueError("weighted median needs at least one positive weight")
    order = np.argsort(v, kind="stable")
    cum = np.cumsum(w[order])
    k = int(np.searchsorted(2.0 * cum, total, side="left"))
    return float(v[order][min(k, len(v) - 1)])


def weighted_mean(values, weights) -> float:
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if not total > 0:
        raise ValueError("weighted mean needs positive total weight")
    return float(np.dot(v, w) / total)


# demographics

MEDIAN_FIELDS = ("house_value", "owner_cost", "owner_cost_pct_income", "gross_rent",
                 "household_income", "median_age")
PERCENT_FIELDS = ("pct_owner_occupied", "pct_mobile_homes", "pct_asian", "pct_black",
                  "pct_white", "pct_hispanic", "pct_poverty", "pct_no_health")
DEMOGRAPHIC_FIELDS = MEDIAN_FIELDS + PERCENT_FIELDS


@dataclass(frozen=True)
class DemographicRecord:
    zone_id: str
    population: float
    house_value: float | None = None
    owner_cost: float | None = None
    owner_cost_pct_income: float | None = None
    gross_rent: float | None = None
    household_income: float | None = None
    median_age: float | None = None
    pct_owner_occupied: float | None = None
    pct_mobile_homes: float | None = None
    pct_asian: float | None = None
    pct_black: float | None = None
    pct_white: float | None = None
    pct_hispanic: float | None = None
    pct_poverty: float | None = None
    pct_no_health: float | None = None

    def __post_init__(self):
        if not self.population >= 0:
            raise ValueError(f"zone {self.zone_id}: population weight must be >= 0")
        for f in PERCENT_FIELDS + ("owner_cost_pct_income",):
            v = getattr(self, f)
            if v is not None and not 0.0 <= v <= 100.0:
                raise ValueError(f"zone {self.zone_id}: {f}={v} outside [0, 100]")


@dataclass
class DemographicsTable(_Table):
    columns: list  # labels
    values: dict  # row name -> {label: value or None}
    zone_counts: dict
    population_share: dict  # label -> percent

    @property
    def rows(self):
        out = []
        for name in (*MEDIAN_FIELDS, *PERCENT_FIELDS):
            out.append({"row": name, **{c: _cell(self.values[name][c]) for c in self.columns}})
        out.append({"row": "zone_count", **{c: self.zone_counts[c] for c in self.columns}})
        out.append({"row": "population_share_pct",
                    **{c: _cell(self.population_share[c]) for c in self.columns}})
        return out

    def to_dicts(self):
        return self.rows


def _column_stats(recs):
    vals = {}
    for f in MEDIAN_FIELDS + PERCENT_FIELDS:
        pairs = [(getattr(r, f), r.population) for r in recs if getattr(r, f) is not None]
        if not pairs or sum(w for _, w in pairs) <= 0:
            vals[f] = None
            continue
        v, w = zip(*pairs)
        vals[f] = weighted_median(v, w) if f in MEDIAN_FIELDS else weighted_mean(v, w)
    return vals


def demographics_by_zone(records, classification, flag_sets: dict,
                         rest_label: str = "rest") -> DemographicsTable:
    """Population-weighted zone summaries; one column per flag plus zones in none of them.

    ``flag_sets`` maps a column label to a classification flag name.
    """
    lookups = {lab: _flag_lookup(classification, f) for lab, f in flag_sets.items()}
    recs = list(records)
    members = {lab: [r for r in recs if lk.get(r.zone_id, False)] for lab, lk in lookups.items()}
    members = {rest_label: [r for r in recs if not any(lk.get(r.zone_id, False) for lk in lookups.values())],
               **members}
    grand = sum(r.population for r in recs)
    labels = list(members)
    values = {f: {} for f in MEDIAN_FIELDS + PERCENT_FIELDS}
    counts, pop_share = {}, {}
    for lab, rs in members.items():
        st = _column_stats(rs)
        for f, v in st.items():
            values[f][lab] = v
        counts[lab] = len(rs)
        pop_share[lab] = 100.0 * sum(r.population for r in rs) / grand if grand > 0 else None
    return DemographicsTable(labels, values, counts, pop_share)


# lenders

@dataclass(frozen=True)
class BankRecord:
    """Balance-sheet items in millions of dollars for one reporting quarter."""

    lender_id: str
    quarter: str
    assets: float
    net_income: float
    equity: float
    loans: float
    deposits: float
    liquid_assets: float

    def __post_init__(self):
        if not self.assets > 0:
            raise ValueError(f"bank {self.lender_id}: assets must be positive")
        if not self.equity != 0:
            raise ValueError(f"bank {self.lender_id}: equity must be non-zero for ROE")

    def ratios(self) -> dict:
        a = self.assets
        return {"roa": self.net_income / a, "roe": self.net_income / self.equity,
                "loans_assets": self.loans / a, "deposits_assets": self.deposits / a,
                "liquidity_assets": self.liquid_assets / a, "equity_assets": self.equity / a}


RATIO_ROWS = ("roa", "roe", "loans_assets", "deposits_assets", "liquidity_assets", "equity_assets")
LENDER_ROWS = ("average_assets", "median_assets", *RATIO_ROWS, "nonbank_share")


@dataclass
class LenderTable(_Table):
    columns: list
    values: dict  # row -> {flag: value or None}
    unmatched_bank_volume: dict  # flag -> dollars
    unmatched_lenders: dict  # flag -> sorted ids

    @property
    def rows(self):
        return [{"row": r, **{c: _cell(self.values[r][c]) for c in self.columns}} for r in LENDER_ROWS] + [
            {"row": "unmatched_bank_volume_usd", **{c: self.unmatched_bank_volume[c] for c in self.columns}}]

    def to_dicts(self):
        return self.rows


def lender_ratios_by_zone(loans, banks, classification, flags, quarter: str,
                          years=None) -> LenderTable:
    """Origination-volume-weighted bank ratios and the non-bank volume share per flagged zone set.

    Ratios are fractions (not percent). The non-bank share is relative to
    non-bank plus matched bank volume; bank-kind loans without a record for
    ``quarter`` are reported as unmatched volume.
    """
    book = {}
    for b in banks:
        if b.quarter != quarter:
            continue
        if b.lender_id in book:
            raise ValueError(f"duplicate bank record {b.lender_id} for {quarter}")
        book[b.lender_id] = b
    years = None if years is None else set(years)
    values = {r: {} for r in LENDER_ROWS}
    unmatched_vol, unmatched_ids = {}, {}
    for flag in flags:
        lookup = _flag_lookup(classification, flag)
        vol = defaultdict(int)
        nonbank, missing = 0, defaultdict(int)
        for ln in loans:
            if years is not None and ln.year not in years:
                continue
            if not lookup.get(ln.zone_id, False):
                continue
            if ln.lender_kind == "nonbank":
                nonbank += ln.amount
            elif ln.lender_id in book:
                vol[ln.lender_id] += ln.amount
            else:
                missing[ln.lender_id] += ln.amount
        ids = sorted(vol)
        w = np.array([vol[i] for i in ids], dtype=float)
        if ids:
            assets = [book[i].assets for i in ids]
            values["average_assets"][flag] = weighted_mean(assets, w)
            values["median_assets"][flag] = weighted_median(assets, w)
            rat = [book[i].ratios() for i in ids]
            for r in RATIO_ROWS:
                values[r][flag] = weighted_mean([x[r] for x in rat], w)
        else:
            for r in ("average_assets", "median_assets", *RATIO_ROWS):
                values[r][flag] = None
        matched = nonbank + sum(vol.values())
        values["nonbank_share"][flag] = nonbank / matched if matched else None
        unmatched_vol[flag] = sum(missing.values())
        unmatched_ids[flag] = sorted(missing)
    return LenderTable(list(flags), values, unmatched_vol, unmatched_ids)


def record_to_dict(rec) -> dict:
    return asdict(rec)


def record_fields(cls) -> list:
    return [f.name for f in fields(cls)]
