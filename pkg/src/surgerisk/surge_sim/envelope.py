"""Maximum envelopes: per-storm MEOW and per-category MOM reductions."""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .grid import BasinGrid
from .solver import SimConfig, simulate
from .storm import StormParams


def tide_label(tide_ft: float) -> str:
    return "high" if tide_ft > 0 else "mean"


@dataclass(frozen=True, eq=False)
class MeowField:
    """Per-cell maximum water level (m above datum) for one storm."""

    values: np.ndarray
    storm_id: str
    basin_id: str
    category: int
    tide_ft: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class MomField:
    """Pointwise maximum over the MEOWs of one category and tide scenario."""

    values: np.ndarray
    category: int
    tide_ft: float
    basin_id: str
    members: tuple = ()

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def tide(self) -> str:
        return tide_label(self.tide_ft)


def run_storm_meow(basin: BasinGrid, storm: StormParams, config: SimConfig = SimConfig()) -> MeowField:
    _check_track_reaches(basin, storm)
    values, _, _ = simulate(basin, storm, config)
    return MeowField(values, storm.storm_id, basin.basin_id, storm.category, storm.tide_offset)


def _check_track_reaches(basin: BasinGrid, storm: StormParams):
    proj = basin.projection
    lon = np.array([p[0] for p in storm.track])
    lat = np.array([p[1] for p in storm.track])
    x, y = proj.to_xy(lon, lat)
    # closest approach of the piecewise-linear track to the pole
    best = np.inf
    for k in range(len(x) - 1):
        ax, ay, bx, by = x[k], y[k], x[k + 1], y[k + 1]
        dx, dy = bx - ax, by - ay
        L2 = dx * dx + dy * dy
        s = 0.0 if L2 == 0 else min(max(-(ax * dx + ay * dy) / L2, 0.0), 1.0)
        best = min(best, float(np.hypot(ax + s * dx, ay + s * dy)))
    if best > basin.bounding_radius():
        raise ValueError(f"storm {storm.storm_id} never enters basin {basin.basin_id} "
                         f"(closest approach {best / 1000:.1f} km)")


def compute_mom(meows) -> MomField:
    meows = list(meows)
    if not meows:
        raise ValueError("compute_mom needs at least one MEOW")
    first = meows[0]
    for m in meows[1:]:
        if m.basin_id != first.basin_id or m.values.shape != first.values.shape:
            raise ValueError(f"MEOW {m.storm_id} is on grid {m.basin_id}{m.values.shape}, "
                             f"expected {first.basin_id}{first.values.shape}")
        if m.category != first.category or m.tide_ft != first.tide_ft:
            raise ValueError("all MEOWs in a MOM must share category and tide")
    values = reduce(np.maximum, (m.values for m in meows))
    return MomField(values, first.category, first.tide_ft, first.basin_id,
                    tuple(sorted(m.storm_id for m in meows)))


def group_moms(meows) -> dict:
    """MOM per ``(category, tide_ft)`` from a mixed list of MEOWs."""
    groups: dict = {}
    for m in meows:
        groups.setdefault((m.category, m.tide_ft), []).append(m)
    return {key: compute_mom(groups[key]) for key in sorted(groups)}


def run_ensemble(basin: BasinGrid, storms, config: SimConfig = SimConfig()):
    """MEOWs for every storm (sequential; members are independent)."""
    return [run_storm_meow(basin, s, config) for s in storms]
