"""Linearised depth-integrated shallow-water solver on polar basin grids.

Layout (staggered, C-grid style):

* ``eta``    cell centres, shape ``(rings, sectors)``
* ``flux_u`` radial faces, shape ``(rings + 1, sectors)``; face ``i`` lies
  between rings ``i-1`` and ``i``; faces ``0`` and ``rings`` are walls.
* ``flux_v`` angular faces, shape ``(rings, sectors)``; face ``j`` lies
  between sectors ``j`` and ``j+1`` (periodic).

Positive ``flux_v`` points toward increasing bearing (clockwise), which
makes the polar frame left-handed; the Coriolis terms carry the
corresponding signs (``dU/dt = -f V``, ``dV/dt = +f U``).

Each step updates the radial transports first, then the angular ones using
the new radial transports in the Coriolis average, then the free surface
from the new transports (forward-backward). Continuity is written in
finite-volume form so the basin volume changes only through the open
boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from ..units import GRAVITY, RHO_WATER
from .grid import BasinGrid
from .storm import OutOfWindowError, StormParams, WindModel, storm_field_xy


class SimulationError(RuntimeError):
    """Numerical failure: non-finite state or blow-up."""


class CFLError(ValueError):
    """Time step exceeds the CFL bound."""


@dataclass(frozen=True)
class SimConfig:
    duration_h: float = 24.0
    start_h: float | None = None  # defaults to the storm's first track time
    dt: float | None = None  # seconds; derived from the CFL bound when None
    c_safety: float = 0.5
    forcing_interval_s: float = 600.0
    drag_coeff: float = 2.0e-3
    gravity: float = GRAVITY
    rho_water: float = RHO_WATER
    dry_threshold: float = 0.01
    min_friction_depth: float = 0.5
    depth_headroom_m: float = 6.0
    coriolis: bool = True
    open_boundary: bool = True
    wind: WindModel = field(default_factory=WindModel)


@dataclass(frozen=True, eq=False)
class Forcing:
    """Cell-centred surface stress (N/m^2) split into radial/angular parts
    and atmospheric pressure deficit (Pa)."""

    stress_r: np.ndarray
    stress_theta: np.ndarray
    pressure_deficit: np.ndarray

    @classmethod
    def zero(cls, shape):
        return cls(np.zeros(shape), np.zeros(shape), np.zeros(shape))


@dataclass(frozen=True, eq=False)
class SimState:
    eta: np.ndarray
    flux_u: np.ndarray
    flux_v: np.ndarray
    time: float = 0.0

    @classmethod
    def at_rest(cls, basin: BasinGrid, tide_m: float = 0.0) -> "SimState":
        nr, na = basin.shape
        eta = np.maximum(basin.cell_elevation, tide_m).astype(float)
        return cls(eta, np.zeros((nr + 1, na)), np.zeros((nr, na)), 0.0)

    def copy(self) -> "SimState":
        return SimState(self.eta.copy(), self.flux_u.copy(), self.flux_v.copy(), self.time)


def cfl_limit(basin: BasinGrid, max_depth: float, c_safety: float, g: float = GRAVITY) -> float:
    if max_depth <= 0:
        return math.inf
    return c_safety * basin.min_cell_width() / math.sqrt(g * max_depth)


def forcing_from_wind(basin: BasinGrid, u, v, deficit, config: SimConfig) -> Forcing:
    """Quadratic wind stress from (east, north) winds at cell centres."""
    rho_air = config.wind.rho_air
    speed = np.hypot(u, v)
    tx = rho_air * config.drag_coeff * speed * u
    ty = rho_air * config.drag_coeff * speed * v
    th = (np.arange(basin.angular_count) + 0.5) * basin.dtheta
    s, c = np.sin(th)[None, :], np.cos(th)[None, :]
    return Forcing(tx * s + ty * c, tx * c - ty * s, np.asarray(deficit, dtype=float))


def storm_forcing(basin: BasinGrid, storm: StormParams, t_h: float, config: SimConfig) -> Forcing:
    """Forcing at time ``t_h``; zero when the storm is not on its track."""
    if t_h < storm.t_start or t_h > storm.t_end or storm.pressure_deficit == 0:
        return Forcing.zero(basin.shape)
    x, y = basin.cell_centers_xy()
    model = replace(config.wind, coriolis=config.wind.coriolis and config.coriolis)
    u, v, d = storm_field_xy(storm, t_h, x, y, basin.projection, model)
    return forcing_from_wind(basin, u, v, d, config)


@numba.njit(cache=True, error_model="numpy", fastmath={"nsz", "arcp", "contract", "reassoc"})
def _advance(eta, fu, fv, meow, z, fric, rc, re, area, dtheta, f, g, rho_w, dt,
             dry_eps, dmin, c_safety, min_width, open_bnd, tide, tau_r, tau_t, pdef, nsteps):
    """Advance ``nsteps`` in place. Returns ``(status, step)``; status 0 ok,
    2 CFL violation. Finiteness is checked by the caller (fastmath would
    fold an in-kernel isfinite)."""
    nr, na = eta.shape
    he = np.empty((nr, na))
    wet = np.empty((nr, na), dtype=np.bool_)
    scale = np.empty((nr, na))
    inv_rg = 1.0 / (rho_w * g)
    for step in range(nsteps):
        dmax = 0.0
        for i in range(nr):
            for j in range(na):
                he[i, j] = eta[i, j] - pdef[i, j] * inv_rg
                h = eta[i, j] - z[i, j]
                wet[i, j] = h > dry_eps
                if h > dmax:
                    dmax = h
        if dmax > 0.0 and dt > c_safety * min_width / math.sqrt(g * dmax):
            return 2, step
        # radial transports
        for i in range(1, nr):
            dist = rc[i] - rc[i - 1]
            for j in range(na):
                d = max(eta[i - 1, j], eta[i, j]) - max(z[i - 1, j], z[i, j])
                if d <= 0.0:
                    fu[i, j] = 0.0
                    continue
                jm = j - 1 if j > 0 else na - 1
                grad = (he[i, j] - he[i - 1, j]) / dist
                vav = 0.25 * (fv[i - 1, j] + fv[i - 1, jm] + fv[i, j] + fv[i, jm])
                tau = 0.5 * (tau_r[i - 1, j] + tau_r[i, j])
                k = 0.5 * (fric[i - 1, j] + fric[i, j]) / max(d, dmin)
                u = (fu[i, j] + dt * (-g * d * grad - f * vav + tau / rho_w)) / (1.0 + dt * k)
                if (u > 0.0 and not wet[i - 1, j]) or (u < 0.0 and not wet[i, j]):
                    u = 0.0
                fu[i, j] = u
        for j in range(na):
            fu[0, j] = 0.0
            fu[nr, j] = 0.0
        # angular transports
        for i in range(nr):
            dist = rc[i] * dtheta
            for j in range(na):
                jp = j + 1 if j < na - 1 else 0
                d = max(eta[i, j], eta[i, jp]) - max(z[i, j], z[i, jp])
                if d <= 0.0:
                    fv[i, j] = 0.0
                    continue
                grad = (he[i, jp] - he[i, j]) / dist
                uav = 0.25 * (fu[i, j] + fu[i + 1, j] + fu[i, jp] + fu[i + 1, jp])
                tau = 0.5 * (tau_t[i, j] + tau_t[i, jp])
                k = 0.5 * (fric[i, j] + fric[i, jp]) / max(d, dmin)
                v = (fv[i, j] + dt * (-g * d * grad + f * uav + tau / rho_w)) / (1.0 + dt * k)
                if (v > 0.0 and not wet[i, j]) or (v < 0.0 and not wet[i, jp]):
                    v = 0.0
                fv[i, j] = v
        # outflow limiter keeps every cell's depth non-negative
        for i in range(nr):
            dr = re[i + 1] - re[i]
            for j in range(na):
                jm = j - 1 if j > 0 else na - 1
                out = (max(fu[i + 1, j], 0.0) * re[i + 1] * dtheta
                       + max(-fu[i, j], 0.0) * re[i] * dtheta
                       + max(fv[i, j], 0.0) * dr + max(-fv[i, jm], 0.0) * dr) * dt
                avail = area[i] * (eta[i, j] - z[i, j])
                if out > avail and out > 0.0:
                    scale[i, j] = max(avail, 0.0) / out
                else:
                    scale[i, j] = 1.0
        for i in range(1, nr):
            for j in range(na):
                u = fu[i, j]
                if u > 0.0:
                    fu[i, j] = u * scale[i - 1, j]
                elif u < 0.0:
                    fu[i, j] = u * scale[i, j]
        for i in range(nr):
            for j in range(na):
                v = fv[i, j]
                jp = j + 1 if j < na - 1 else 0
                if v > 0.0:
                    fv[i, j] = v * scale[i, j]
                elif v < 0.0:
                    fv[i, j] = v * scale[i, jp]
        # continuity
        for i in range(nr):
            dr = re[i + 1] - re[i]
            a_out = re[i + 1] * dtheta
            a_in = re[i] * dtheta
            for j in range(na):
                jm = j - 1 if j > 0 else na - 1
                div = a_out * fu[i + 1, j] - a_in * fu[i, j] + dr * (fv[i, j] - fv[i, jm])
                eta[i, j] = eta[i, j] - dt * div / area[i]
        if open_bnd:
            for j in range(na):
                if z[nr - 1, j] < 0.0:
                    eta[nr - 1, j] = tide
        for i in range(nr):
            for j in range(na):
                if eta[i, j] > meow[i, j]:
                    meow[i, j] = eta[i, j]
    return 0, nsteps


def _kernel_args(basin: BasinGrid, config: SimConfig):
    return dict(
        z=np.ascontiguousarray(basin.cell_elevation, dtype=float),
        fric=np.ascontiguousarray(basin.friction_coeff, dtype=float),
        rc=basin.ring_centers.astype(float),
        re=basin.radial_edges.astype(float),
        area=basin.cell_area[:, 0].astype(float),
        dtheta=basin.dtheta,
        f=basin.coriolis if config.coriolis else 0.0,
        g=config.gravity,
        rho_w=config.rho_water,
        dry_eps=config.dry_threshold,
        dmin=config.min_friction_depth,
        c_safety=config.c_safety,
        min_width=basin.min_cell_width(),
    )


def _run_kernel(state: SimState, meow, basin, config, forcing, dt, nsteps, tide_m, label=""):
    eta = np.array(state.eta, dtype=float)
    fu = np.array(state.flux_u, dtype=float)
    fv = np.array(state.flux_v, dtype=float)
    args = _kernel_args(basin, config)
    status, step = _advance(
        eta, fu, fv, meow, open_bnd=config.open_boundary, tide=tide_m,
        tau_r=np.ascontiguousarray(forcing.stress_r, dtype=float),
        tau_t=np.ascontiguousarray(forcing.stress_theta, dtype=float),
        pdef=np.ascontiguousarray(forcing.pressure_deficit, dtype=float),
        dt=float(dt), nsteps=int(nsteps), **args)
    bad = ~np.isfinite(eta)
    if bad.any():
        i, j = (int(k) for k in np.argwhere(bad)[0])
        first = int(round(state.time / dt))
        raise SimulationError(f"non-finite water level at cell ({i}, {j}) within steps "
                              f"{first + 1}..{first + nsteps} {label}".rstrip())
    if status == 2:
        raise CFLError(f"dt={dt:.3f}s exceeds CFL bound on step {step} {label}".rstrip())
    return SimState(eta, fu, fv, state.time + nsteps * dt)


def step_shallow_water(state: SimState, basin: BasinGrid, forcing: Forcing, dt: float,
                       config: SimConfig = SimConfig(), tide_m: float = 0.0) -> SimState:
    """One explicit forward-backward update; returns a new state."""
    depth = float(np.max(state.eta - basin.cell_elevation))
    limit = cfl_limit(basin, depth, config.c_safety, config.gravity)
    if dt > limit:
        raise CFLError(f"dt={dt}s exceeds CFL bound {limit:.4f}s "
                       f"(min width {basin.min_cell_width():.1f} m, max depth {depth:.2f} m)")
    meow = np.array(state.eta, dtype=float)
    return _run_kernel(state, meow, basin, config, forcing, dt, 1, tide_m)


def time_step(basin: BasinGrid, storm_tide_m: float, config: SimConfig):
    """(dt, steps per forcing interval) honouring the CFL bound."""
    depth = float(np.max(storm_tide_m - basin.cell_elevation)) + config.depth_headroom_m
    limit = cfl_limit(basin, depth, config.c_safety, config.gravity)
    if config.dt is not None:
        if config.dt > limit:
            raise CFLError(f"configured dt={config.dt}s exceeds CFL bound {limit:.4f}s")
        dt = float(config.dt)
        per = max(1, int(round(config.forcing_interval_s / dt)))
        return dt, per
    per = max(1, math.ceil(config.forcing_interval_s / limit))
    return config.forcing_interval_s / per, per


def simulate(basin: BasinGrid, storm: StormParams, config: SimConfig = SimConfig(),
             snapshots: bool = False):
    """Run one storm; returns ``(meow_values_m, final_state, snapshot_list)``.

    With ``snapshots=True`` every post-step water level is retained (slow;
    intended for verification).
    """
    tide = storm.tide_m
    dt, per = time_step(basin, tide, config)
    n_intervals = max(1, math.ceil(config.duration_h * 3600.0 / config.forcing_interval_s - 1e-9))
    t0 = storm.t_start if config.start_h is None else config.start_h
    state = SimState.at_rest(basin, tide)
    state = SimState(state.eta, state.flux_u, state.flux_v, t0 * 3600.0)
    meow = np.array(state.eta, dtype=float)
    snaps = [state.eta.copy()] if snapshots else []
    label = f"(storm {storm.storm_id}, basin {basin.basin_id})"
    for k in range(n_intervals):
        t_h = t0 + k * config.forcing_interval_s / 3600.0
        forcing = storm_forcing(basin, storm, t_h, config)
        if snapshots:
            for _ in range(per):
                state = _run_kernel(state, meow, basin, config, forcing, dt, 1, tide, label)
                snaps.append(state.eta.copy())
        else:
            state = _run_kernel(state, meow, basin, config, forcing, dt, per, tide, label)
    return meow, state, snaps
