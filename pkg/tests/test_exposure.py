from decimal import Decimal

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from surgerisk.exposure import (BankRecord, DemographicRecord, LoanRecord, MEDIAN_FIELDS,
                                PERCENT_FIELDS, demographics_by_zone, feature_shares_by_zone,
                                filter_loans_mcdash, lender_ratios_by_zone,
                                originations_by_zone_year, render_share, exact_share,
                                weighted_median)

from table_data import BN, MN, TABLE1, TABLE1_TOTALS, TABLE2, table1_loans, table2_loans

FLAGS = {"in": True, "out": False}


def loan(year=2012, zone="z", amount=200_000, value=300_000, **kw):
    return LoanRecord(year, zone, amount, property_value=value, **kw)


# filters

def test_mcdash_filters():
    good = [loan(zone="big") for _ in range(50)]
    assert len(filter_loans_mcdash(good)) == 50
    assert filter_loans_mcdash([loan(amount=49_000)] + good[:10]) == good[:10]
    assert filter_loans_mcdash([loan(zone="few") for _ in range(9)]) == []
    # the 10-loan rule counts survivors of the other filters
    mixed = [loan(zone="m") for _ in range(9)] + [loan(zone="m", lien="other")]
    assert filter_loans_mcdash(mixed) == []
    edge = [loan(zone="e", amount=50_000), loan(zone="e", value=50_000),
            loan(zone="e", occupancy="other")] + [loan(zone="e") for _ in range(10)]
    assert len(filter_loans_mcdash(edge)) == 10


def test_loan_validation():
    for bad in (dict(amount=0), dict(amount=-5), dict(amount=1.5), dict(doc_type="alt"),
                dict(lien="second"), dict(lender_kind="cu")):
        kw = dict(year=2012, zone_id="z", amount=100)
        kw.update(bad)
        with pytest.raises(ValueError):
            LoanRecord(**kw)


# originations

def test_share_rendering_half_even():
    assert render_share(exact_share(1, 8), 1) == Decimal("12.5")
    assert render_share(exact_share(1, 16), 2) == Decimal("6.25")
    assert render_share(exact_share(1, 3200), 2) == Decimal("0.03")  # 0.03125 -> 0.03
    assert render_share(exact_share(1, 0), 2) is None


def test_originations_examples():
    loans = [loan(2012, "in", 210 * BN), loan(2012, "out", 1925 * BN),
             loan(2018, "in", 198 * BN), loan(2018, "out", 1795 * BN),
             loan(2019, "out", 5 * BN)]
    t = originations_by_zone_year(loans, FLAGS, "f")
    assert t.by_year(2012).share_pct == Decimal("9.84")
    assert abs(float(t.by_year(2012).share_pct) - 9.80) <= 0.05
    assert abs(float(t.by_year(2018).share_pct) - 9.90) <= 0.05
    r = t.by_year(2019)
    assert r.in_zone == 0 and r.share_pct == Decimal("0.00")
    assert t.by_year(2012).agency_share is None
    empty = originations_by_zone_year(loans, FLAGS, "f", years=[2011])
    assert empty.by_year(2011).share is None and empty.by_year(2011).total == 0


def test_originations_unmatched_zone_diagnostics():
    loans = [loan(zone="in"), loan(zone="ghost"), loan(zone="ghost")]
    t = originations_by_zone_year(loans, FLAGS, "f")
    assert t.diagnostics == {"unmatched_zone_loans": 2, "unmatched_zone_ids": ["ghost"]}
    assert t.rows[0].in_zone == 200_000 and t.rows[0].total == 600_000


@pytest.mark.parametrize("panel", sorted(TABLE1))
def test_table1_fixture(panel):
    t = originations_by_zone_year(table1_loans(panel), FLAGS, panel)
    for year, (total_bn, agency_bn) in TABLE1_TOTALS.items():
        s_bn, s_pct, as_bn, as_pct = TABLE1[panel][year]
        r = t.by_year(year)
        for amount, printed in ((r.total, total_bn), (r.in_zone, s_bn),
                                (r.agency_total, agency_bn), (r.agency_in_zone, as_bn)):
            assert (printed - 0.5) * BN <= amount < (printed + 0.5) * BN
        assert abs(float(r.share_pct) - float(s_pct)) <= 0.05
        assert abs(float(r.agency_share_pct) - float(as_pct)) <= 0.05
        assert r.in_zone + r.out_zone == r.total


# feature shares

def test_table2_fixture():
    loans = table2_loans()
    noise = [loan(2010, "in", lien="other"), loan(2010, "out", amount=30_000)]
    filtered = filter_loans_mcdash(loans + noise)
    assert len(filtered) == len(loans)
    t = feature_shares_by_zone(filtered, FLAGS, "surge5_cat4_high")
    for side, years in TABLE2.items():
        for year, (amounts, pcts) in years.items():
            r = t.get(year, side)
            assert r.total == amounts[0] * MN
            for k, f in enumerate(("io", "fixed_rate", "full_doc", "nina")):
                assert r.amounts[f] == amounts[k + 1] * MN
                assert abs(float(r.share_pct(f)) - float(pcts[k])) <= 0.05
    assert t.get(2016, "in").share_pct("io") == Decimal("10.2")
    assert t.get(2016, "out").share_pct("fixed_rate") == Decimal("89.9")


def test_all_io_and_series():
    loans = [loan(2012, "in", io=True) for _ in range(3)]
    t = feature_shares_by_zone(loans, FLAGS, "f")
    assert t.get(2012, "in").share_pct("io") == Decimal("100.0")
    assert t.get(2012, "out").share("io") is None
    s = t.series()
    assert {"year": 2012, "zone": "in", "feature": "io", "share_pct": "100.0"} in s


loan_st = st.builds(
    lambda y, z, a, io, fr, doc, ag: LoanRecord(y, z, a, agency=ag, io=io, fixed_rate=fr,
                                                doc_type=doc, property_value=a),
    st.integers(2010, 2012), st.sampled_from(["a", "b", "c", "d"]), st.integers(2, 10 ** 7),
    st.booleans(), st.booleans(), st.sampled_from(["full", "low", "nina"]), st.booleans())


@settings(max_examples=50, deadline=None)
@given(st.lists(loan_st, max_size=40), st.data())
def test_sum_decomposition_and_split_invariance(loans, data):
    cls5 = {"a": True, "b": True, "c": False, "d": False}
    cls10 = {"a": True, "b": False, "c": False, "d": False}
    t5 = originations_by_zone_year(loans, cls5, "f5")
    t10 = originations_by_zone_year(loans, cls10, "f10")
    for r5, r10 in zip(t5.rows, t10.rows):
        assert r5.in_zone + r5.out_zone == r5.total
        assert r10.in_zone <= r5.in_zone
        for s in (r5.share, r5.agency_share):
            assert s is None or 0 <= s <= 100
    if not loans:
        return
    k = data.draw(st.integers(0, len(loans) - 1))
    ln = loans[k]
    cut = data.draw(st.integers(1, ln.amount - 1))
    a = LoanRecord(**{**_asdict(ln), "amount": cut})
    b = LoanRecord(**{**_asdict(ln), "amount": ln.amount - cut})
    split = loans[:k] + [a, b] + loans[k + 1:]
    f1 = feature_shares_by_zone(loans, cls5, "f5")
    f2 = feature_shares_by_zone(split, cls5, "f5")
    assert f1.to_dicts() == f2.to_dicts()


def _asdict(ln):
    return {f: getattr(ln, f) for f in ln.__slots__}


# weighted median

def test_weighted_median_cases():
    assert weighted_median([1, 2, 3], [1, 1, 1]) == 2
    assert weighted_median([3, 1, 2], [2, 2, 2]) == 2
    assert weighted_median([1, 2], [1, 1]) == 1  # lower median
    assert weighted_median([5, 1], [0, 3]) == 1
    with pytest.raises(ValueError):
        weighted_median([1, 2], [0, 0])
    with pytest.raises(ValueError):
        weighted_median([1], [-1])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-50, 50), st.integers(0, 6)), min_size=1, max_size=30)
       .filter(lambda xs: sum(w for _, w in xs) > 0))
def test_weighted_median_expansion_oracle(pairs):
    v, w = zip(*pairs)
    expanded = sorted(x for x, n in pairs for _ in range(n))
    lower = expanded[(len(expanded) - 1) // 2]
    assert weighted_median(v, w) == lower
    assert weighted_median(v, [2 * x for x in w]) == lower


# demographics

def _demo(zid, pop, rng):
    kw = {f: float(rng.uniform(100, 1000)) for f in MEDIAN_FIELDS}
    kw["owner_cost_pct_income"] = float(rng.uniform(10, 40))
    kw.update({f: float(rng.uniform(0, 100)) for f in PERCENT_FIELDS})
    return DemographicRecord(zid, pop, **kw)


def test_demographics_single_zone_columns():
    rng = np.random.default_rng(0)
    recs = [_demo("r", 10, rng), _demo("s5", 5, rng), _demo("sf", 3, rng)]
    cls = {"surge5": {"r": False, "s5": True, "sf": False}, "sfha": {"r": False, "s5": False, "sf": True}}
    t = demographics_by_zone(recs, _Cls(cls), {"surge 5ft": "surge5", "SFHA": "sfha"})
    assert t.columns == ["rest", "surge 5ft", "SFHA"]
    for f in MEDIAN_FIELDS + PERCENT_FIELDS:
        assert t.values[f]["rest"] == pytest.approx(getattr(recs[0], f))
        assert t.values[f]["surge 5ft"] == pytest.approx(getattr(recs[1], f))
    assert t.zone_counts == {"rest": 1, "surge 5ft": 1, "SFHA": 1}
    assert sum(t.population_share.values()) == pytest.approx(100.0)


def test_demographics_random_oracle_and_empty():
    rng = np.random.default_rng(4)
    recs = [_demo(f"z{k}", float(rng.integers(1, 1000)), rng) for k in range(20)]
    s5 = {r.zone_id: bool(rng.random() < 0.4) for r in recs}
    s15 = {z: v and rng.random() < 0.5 for z, v in s5.items()}
    cls = _Cls({"s5": s5, "s15": s15, "none": {z: False for z in s5}})
    t = demographics_by_zone(recs, cls, {"5": "s5", "15": "s15", "empty": "none"})
    col = {"5": [r for r in recs if s5[r.zone_id]], "15": [r for r in recs if s15[r.zone_id]],
           "rest": [r for r in recs if not s5[r.zone_id]]}
    grand = sum(r.population for r in recs)
    for lab, rs in col.items():
        for f in PERCENT_FIELDS:
            exp = sum(getattr(r, f) * r.population for r in rs) / sum(r.population for r in rs)
            assert t.values[f][lab] == pytest.approx(exp, rel=1e-12)
        for f in MEDIAN_FIELDS:
            srt = sorted(rs, key=lambda r: getattr(r, f))
            half, acc = sum(r.population for r in rs) / 2, 0.0
            for r in srt:
                acc += r.population
                if acc >= half:
                    break
            assert t.values[f][lab] == getattr(r, f)
        assert t.population_share[lab] == pytest.approx(100 * sum(r.population for r in rs) / grand)
    assert all(t.values[f]["empty"] is None for f in MEDIAN_FIELDS + PERCENT_FIELDS)
    assert t.population_share["rest"] + t.population_share["5"] == pytest.approx(100.0)


def test_demographic_validation():
    with pytest.raises(ValueError):
        DemographicRecord("z", -1)
    with pytest.raises(ValueError):
        DemographicRecord("z", 1, pct_asian=101)


class _Cls:
    def __init__(self, flags):
        self.flags = flags

    def flag_map(self, name):
        return self.flags[name]


# lenders

def _bank(lid, assets=1000.0, roa=0.002, q="2012Q1", **kw):
    base = dict(net_income=roa * assets, equity=0.1 * assets, loans=0.6 * assets,
                deposits=0.7 * assets, liquid_assets=0.2 * assets)
    base.update(kw)
    return BankRecord(lid, q, assets, **base)


def test_lender_single_and_two_banks():
    cls = {"in": True, "out": False}
    one = lender_ratios_by_zone([loan(zone="in", lender_id="A")], [_bank("A")], cls, ["f"], "2012Q1")
    b = _bank("A")
    for k, v in b.ratios().items():
        assert one.values[k]["f"] == pytest.approx(v)
    assert one.values["average_assets"]["f"] == 1000.0 and one.values["nonbank_share"]["f"] == 0.0
    loans = [loan(zone="in", lender_id="A"), loan(zone="in", lender_id="B"),
             loan(zone="out", lender_id="B", amount=9_000_000)]
    two = lender_ratios_by_zone(loans, [_bank("A", roa=0.002), _bank("B", roa=0.003)], cls, ["f"], "2012Q1")
    assert two.values["roa"]["f"] == pytest.approx(0.0025)


def test_lender_nonbank_share_and_unmatched():
    cls = {"in": True}
    loans = [loan(zone="in", lender_id="A", amount=300_000),
             loan(zone="in", lender_id="N", lender_kind="nonbank", amount=100_000),
             loan(zone="in", lender_id="X", amount=50_000)]
    t = lender_ratios_by_zone(loans, [_bank("A"), _bank("X", q="2013Q1")], cls, ["f"], "2012Q1")
    assert t.values["nonbank_share"]["f"] == pytest.approx(0.25)
    assert t.unmatched_bank_volume["f"] == 50_000 and t.unmatched_lenders["f"] == ["X"]
    none = lender_ratios_by_zone(loans[1:2], [], cls, ["f"], "2012Q1")
    assert none.values["roa"]["f"] is None and none.values["nonbank_share"]["f"] == 1.0


def test_lender_random_oracle():
    rng = np.random.default_rng(9)
    banks = [_bank(f"B{k}", assets=float(rng.uniform(100, 9000)), roa=float(rng.uniform(0, 0.005)),
                   liquid_assets=float(rng.uniform(10, 90))) for k in range(5)]
    loans = [loan(zone=str(rng.choice(["in", "out"])), lender_id=f"B{rng.integers(5)}",
                  amount=int(rng.integers(60_000, 900_000))) for _ in range(200)]
    t = lender_ratios_by_zone(loans, banks, {"in": True, "out": False}, ["f"], "2012Q1")
    vol = {b.lender_id: sum(l.amount for l in loans if l.zone_id == "in" and l.lender_id == b.lender_id)
           for b in banks}
    W = sum(vol.values())
    for key in ("roa", "liquidity_assets"):
        exp = sum(vol[b.lender_id] * b.ratios()[key] for b in banks) / W
        assert t.values[key]["f"] == pytest.approx(exp, rel=1e-12)
    assert t.values["average_assets"]["f"] == pytest.approx(sum(vol[b.lender_id] * b.assets for b in banks) / W)
    ranked = sorted(banks, key=lambda b: b.assets)
    acc = 0
    for b in ranked:
        acc += vol[b.lender_id]
        if 2 * acc >= W:
            break
    assert t.values["median_assets"]["f"] == b.assets


def test_bank_validation():
    with pytest.raises(ValueError):
        _bank("Z", assets=0.0)
    with pytest.raises(ValueError):
        lender_ratios_by_zone([], [_bank("A"), _bank("A")], {}, ["f"], "2012Q1")
