"""Print reproduced shares for the aggregated Table 1 and Table 2 fixtures next to the printed values."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from table_data import TABLE1, TABLE1_TOTALS, TABLE2, table1_loans, table2_loans  # noqa: E402

from surgerisk.exposure import (feature_shares_by_zone, filter_loans_mcdash,  # noqa: E402
                                originations_by_zone_year)

FLAGS = {"in": True, "out": False}


def main():
    for panel in TABLE1:
        t = originations_by_zone_year(table1_loans(panel), FLAGS, panel)
        print(f"Table 1 {panel}: year share (printed) agency share (printed)")
        for year in TABLE1_TOTALS:
            r = t.by_year(year)
            _, pct, _, apct = TABLE1[panel][year]
            print(f"  {year} {r.share_pct:>6} ({pct:>5})  {r.agency_share_pct:>6} ({apct:>5})")
    t = feature_shares_by_zone(filter_loans_mcdash(table2_loans()), FLAGS, "surge")
    for side, years in TABLE2.items():
        print(f"Table 2 {side}: year io fixed full_doc nina (printed)")
        for year, (_, pcts) in years.items():
            r = t.get(year, side)
            got = " ".join(str(r.share_pct(f)) for f in ("io", "fixed_rate", "full_doc", "nina"))
            print(f"  {year} {got} ({' '.join(pcts)})")


if __name__ == "__main__":
    main()
