"""Price-to-rent trend regressions with year x zone interactions and two-way clustering."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

Z95 = 1.96
OUTCOMES = ("log_price_to_rent", "log_rent")
FAMILIES = {"surge15": "surge15", "sfha": "sfha"}


class RankDeficientError(ValueError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"design is rank deficient; collinear columns: {', '.join(self.columns)}")


@dataclass(frozen=True, slots=True)
class PanelObservation:
    zone_id: str
    year: int
    month: int
    log_price_to_rent: float
    log_rent: float
    surge15: bool
    sfha_majority: bool

    def __post_init__(self):
        if not (math.isfinite(self.log_price_to_rent) and math.isfinite(self.log_rent)):
            raise ValueError(f"non-finite panel value for zone {self.zone_id} {self.year}-{self.month}")
        if not 1 <= self.month <= 12:
            raise ValueError(f"month {self.month} out of range")


def panel_from_indices(rows, surge15: dict, sfha_majority: dict) -> list:
    """``rows`` of (zone_id, year, month, price_index, rent_index); flags keyed by zone."""
    out = []
    for zid, year, month, price, rent in rows:
        if not (price > 0 and rent > 0):
            raise ValueError(f"zone {zid} {year}-{month}: indices must be positive")
        lr = math.log(rent)
        out.append(PanelObservation(zid, int(year), int(month), math.log(price) - lr, lr,
                                    bool(surge15.get(zid, False)), bool(sfha_majority.get(zid, False))))
    return out


@dataclass
class Design:
    X: np.ndarray
    y: np.ndarray
    columns: list
    dropped: list
    years: list
    base_year: int
    zones: np.ndarray  # cluster labels per row
    periods: np.ndarray


def design_columns(years, base_year):
    others = [t for t in years if t != base_year]
    cols = ["const"] + [f"year{t}" for t in others]
    for fam in FAMILIES:
        cols += [fam] + [f"year{t}:{fam}" for t in others]
    return cols


def build_design(panel, base_year: int | None = None, outcome: str = "log_price_to_rent") -> Design:
    """Columns: const, year dummies, then per family (surge15, sfha) a group main
    effect followed by year interactions; the base year is the reference in both."""
    if outcome not in OUTCOMES:
        raise ValueError(f"outcome must be one of {OUTCOMES}")
    panel = list(panel)
    years = sorted({o.year for o in panel})
    if len(years) < 2:
        raise ValueError("need at least two years")
    base_year = years[0] if base_year is None else base_year
    if base_year not in years:
        raise ValueError(f"base year {base_year} not in sample years")
    flags = {}
    for o in panel:
        f = (o.surge15, o.sfha_majority)
        if flags.setdefault(o.zone_id, f) != f:
            raise ValueError(f"zone {o.zone_id}: flags vary over time")
    others = [t for t in years if t != base_year]
    pos = {t: k for k, t in enumerate(others)}
    n, T1 = len(panel), len(others)
    cols = design_columns(years, base_year)
    X = np.zeros((n, len(cols)))
    X[:, 0] = 1.0
    for r, o in enumerate(panel):
        k = pos.get(o.year)
        for f, on in enumerate((o.surge15, o.sfha_majority)):
            if on:
                X[r, 1 + T1 + f * (T1 + 1)] = 1.0
                if k is not None:
                    X[r, 2 + T1 + f * (T1 + 1) + k] = 1.0
        if k is not None:
            X[r, 1 + k] = 1.0
    y = np.array([getattr(o, outcome) for o in panel])
    keep = np.abs(X).sum(axis=0) > 0
    dropped = [c for c, k in zip(cols, keep) if not k]
    return Design(X[:, keep], y, [c for c, k in zip(cols, keep) if k], dropped, years, base_year,
                  np.array([o.zone_id for o in panel]), np.array([o.year for o in panel]))


@dataclass
class OLSFit:
    beta: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    xtx_inv: np.ndarray


def ols_fit(X, y, columns=None) -> OLSFit:
    """Least squares via column-pivoted QR; rank deficiency is an error naming columns."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    if n < k:
        raise ValueError(f"{n} observations for {k} columns")
    columns = list(columns) if columns is not None else [f"x{j}" for j in range(k)]
    Q, R, piv = linalg.qr(X, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    tol = max(n, k) * np.finfo(float).eps * (d[0] if k else 0.0)
    rank = int((d > tol).sum())
    if rank < k:
        raise RankDeficientError(sorted(columns[j] for j in piv[rank:]))
    z = linalg.solve_triangular(R, Q.T @ y)
    beta = np.empty(k)
    beta[piv] = z
    Rinv = linalg.solve_triangular(R, np.eye(k))
    inv_p = Rinv @ Rinv.T
    xtx_inv = np.empty_like(inv_p)
    xtx_inv[np.ix_(piv, piv)] = inv_p
    fitted = X @ beta
    return OLSFit(beta, y - fitted, fitted, xtx_inv)


def _codes(labels):
    _, inv = np.unique(np.asarray(labels), return_inverse=True)
    return inv.ravel()


def cluster_meat(scores, codes):
    G = int(codes.max()) + 1
    S = np.zeros((G, scores.shape[1]))
    np.add.at(S, codes, scores)
    return S.T @ S, G


@dataclass
class ClusteredCov:
    cov: np.ndarray
    n_clusters: dict
    psd_fixed: bool
    min_eigenvalue: float
    degenerate: list = field(default_factory=list)  # dimensions whose score sums vanish


def _scale(G, n, k, small_sample):
    return (G / (G - 1)) * ((n - 1) / (n - k)) if small_sample and G > 1 else 1.0


def cluster_cov(X, residuals, labels, xtx_inv=None, small_sample: bool = True):
    """One-way cluster-robust sandwich."""
    X = np.asarray(X, dtype=float)
    n, k = X.shape
    B = linalg.inv(X.T @ X) if xtx_inv is None else xtx_inv
    meat, G = cluster_meat(X * np.asarray(residuals)[:, None], _codes(labels))
    if G < 2:
        raise ValueError("clustering needs at least two clusters")
    return _scale(G, n, k, small_sample) * (B @ meat @ B)


def twoway_clustered_cov(X, residuals, cluster_a, cluster_b, xtx_inv=None,
                         small_sample: bool = True, subtract_intersection: bool = True,
                         psd_floor: bool = True) -> ClusteredCov:
    """V = V_A + V_B - V_AB, each scaled by G/(G-1)*(N-1)/(N-K) when ``small_sample``.

    With ``subtract_intersection=False`` the intersection term is left out,
    which gives a conservative, always-PSD variant. Dimensions whose cluster
    score sums vanish identically (the regressors absorb them) are listed in
    ``degenerate``; in that case the composed estimate is biased downward.
    """
    X = np.asarray(X, dtype=float)
    e = np.asarray(residuals, dtype=float)
    n, k = X.shape
    if xtx_inv is None:
        xtx_inv = linalg.inv(X.T @ X)
    ca, cb = _codes(cluster_a), _codes(cluster_b)
    cab = _codes([f"{a}\x1f{b}" for a, b in zip(ca, cb)])
    scores = X * e[:, None]
    ref = float(np.abs(scores).sum(axis=0).max()) or 1.0
    V = np.zeros((k, k))
    counts, degenerate = {}, []
    for name, codes, sign in (("a", ca, 1.0), ("b", cb, 1.0), ("ab", cab, -1.0)):
        meat, G = cluster_meat(scores, codes)
        counts[name] = G
        if G < 2 and name != "ab":
            raise ValueError(f"clustering dimension '{name}' has a single cluster")
        if name != "ab" and np.sqrt(np.abs(np.diag(meat)).max()) <= 1e-9 * ref:
            degenerate.append(name)
        if name == "ab" and not subtract_intersection:
            continue
        V += sign * _scale(G, n, k, small_sample) * (xtx_inv @ meat @ xtx_inv)
    V = 0.5 * (V + V.T)
    w, Q = linalg.eigh(V)
    fixed = psd_floor and bool(w.min() < -1e-12 * max(abs(w.max()), 1e-300))
    if fixed:
        V = (Q * np.maximum(w, 0.0)) @ Q.T
        V = 0.5 * (V + V.T)
    return ClusteredCov(V, counts, fixed, float(w.min()), degenerate)


def robust_sandwich(X, residuals, small_sample: bool = True):
    """Heteroskedasticity-robust covariance (HC1 when ``small_sample``)."""
    X = np.asarray(X, dtype=float)
    n, k = X.shape
    B = linalg.inv(X.T @ X)
    s = X * np.asarray(residuals)[:, None]
    c = n / (n - k) if small_sample else 1.0
    return c * B @ (s.T @ s) @ B


@dataclass
class RegressionResult:
    outcome: str
    columns: list
    coef: np.ndarray
    cov: np.ndarray
    n_obs: int
    n_clusters: dict
    dropped: list = field(default_factory=list)
    years: list = field(default_factory=list)
    base_year: int = 0
    psd_fixed: bool = False
    cov_type: str = "twoway"
    degenerate: list = field(default_factory=list)

    @property
    def se(self):
        return np.sqrt(np.maximum(np.diag(self.cov), 0.0))

    @property
    def ci_low(self):
        return self.coef - Z95 * self.se

    @property
    def ci_high(self):
        return self.coef + Z95 * self.se

    def __getitem__(self, name):
        return float(self.coef[self.columns.index(name)])

    def table(self):
        return [{"column": c, "estimate": repr(float(b)), "se": repr(float(s)),
                 "lower95": repr(float(lo)), "upper95": repr(float(hi))}
                for c, b, s, lo, hi in zip(self.columns, self.coef, self.se, self.ci_low, self.ci_high)]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["column", "estimate", "se", "lower95", "upper95"])
            w.writeheader()
            w.writerows(self.table())


COV_TYPES = ("twoway", "twoway_no_intersection", "zone", "hc1")


def fit(panel, outcome: str = "log_price_to_rent", base_year: int | None = None,
        small_sample: bool = True, cov_type: str = "twoway") -> RegressionResult:
    """OLS on the trend design with clustered errors (zone and year by default)."""
    if cov_type not in COV_TYPES:
        raise ValueError(f"cov_type must be one of {COV_TYPES}")
    d = build_design(panel, base_year, outcome)
    f = ols_fit(d.X, d.y, d.columns)
    cc = twoway_clustered_cov(d.X, f.residuals, d.zones, d.periods, f.xtx_inv, small_sample,
                              subtract_intersection=cov_type != "twoway_no_intersection")
    cov = cc.cov
    if cov_type == "zone":
        cov = cluster_cov(d.X, f.residuals, d.zones, f.xtx_inv, small_sample)
    elif cov_type == "hc1":
        cov = robust_sandwich(d.X, f.residuals, small_sample)
    return RegressionResult(outcome, d.columns, f.beta, cov, len(d.y),
                            {"zone": cc.n_clusters["a"], "year": cc.n_clusters["b"],
                             "zone_year": cc.n_clusters["ab"]},
                            d.dropped, d.years, d.base_year,
                            cc.psd_fixed if cov_type.startswith("twoway") else False,
                            cov_type, ["zone" if x == "a" else "year" for x in cc.degenerate])


def _family_columns(result, family):
    if family == "national":
        return [(t, f"year{t}") for t in result.years]
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected surge15, sfha or national")
    return [(t, f"year{t}:{family}") for t in result.years]


@dataclass(frozen=True)
class TrendPoint:
    year: int
    estimate: float
    lower95: float
    upper95: float


def trend_series(result: RegressionResult, family: str) -> list:
    """Per-year coefficients relative to the base year (zero there by construction)."""
    se = result.se
    out = []
    for t, col in _family_columns(result, family):
        if t == result.base_year or col not in result.columns:
            out.append(TrendPoint(t, 0.0, 0.0, 0.0))
            continue
        k = result.columns.index(col)
        b = float(result.coef[k])
        out.append(TrendPoint(t, b, b - Z95 * float(se[k]), b + Z95 * float(se[k])))
    return out


def trend_slope(result: RegressionResult, family: str):
    """Least-squares slope per year through the family's yearly coefficients.

    Returned as (estimate, se, lower95, upper95); the slope is a linear
    combination of coefficients so its variance is exact under ``cov``.
    """
    pts = _family_columns(result, family)
    t = np.array([p[0] for p in pts], dtype=float)
    w = (t - t.mean()) / ((t - t.mean()) ** 2).sum()
    c = np.zeros(len(result.columns))
    for wk, (yr, col) in zip(w, pts):
        if yr != result.base_year and col in result.columns:
            c[result.columns.index(col)] = wk
    est = float(c @ result.coef)
    se = float(np.sqrt(max(c @ result.cov @ c, 0.0)))
    return est, se, est - Z95 * se, est + Z95 * se


def write_trend_csv(path, results: dict):
    """Figure-style plot data for each (outcome label -> result) over all families."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["outcome", "family", "year", "estimate", "lower95", "upper95"])
        for label, res in results.items():
            for fam in ("national", *FAMILIES):
                for p in trend_series(res, fam):
                    w.writerow([label, fam, p.year, repr(p.estimate), repr(p.lower95), repr(p.upper95)])


def synthetic_panel(rng, n_zones=80, years=range(2010, 2020), months=12, surge_share=0.3,
                    sfha_share=0.2, drift=-0.01, zone_sd=0.05, zone_year_sd=0.02, noise_sd=0.01):
    """Panel where surge15 zones drift by ``drift`` log points per year versus the rest."""
    years = list(years)
    zones = [f"z{k:04d}" for k in range(n_zones)]
    surge = rng.random(n_zones) < surge_share
    sfha = rng.random(n_zones) < sfha_share
    year_fx = rng.normal(0, 0.02, len(years)).cumsum()
    zone_fx = rng.normal(0, zone_sd, n_zones)
    rent_fx = rng.normal(7.0, 0.2, n_zones)
    out = []
    for z in range(n_zones):
        for k, t in enumerate(years):
            zy = rng.normal(0, zone_year_sd)
            eps = rng.normal(0, noise_sd, months)
            reps = rng.normal(0, noise_sd, months)
            for m in range(months):
                lpr = 2.8 + year_fx[k] + zone_fx[z] + drift * k * surge[z] + zy + eps[m]
                lr = rent_fx[z] + 0.03 * k + reps[m]
                out.append(PanelObservation(zones[z], t, m + 1, float(lpr), float(lr),
                                            bool(surge[z]), bool(sfha[z])))
    return out
