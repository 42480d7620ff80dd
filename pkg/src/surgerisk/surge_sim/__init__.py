from .envelope import MeowField, MomField, compute_mom, group_moms, run_ensemble, run_storm_meow, tide_label
from .grid import BasinGrid, uniform_basin
from .solver import (CFLError, Forcing, SimConfig, SimState, SimulationError, cfl_limit,
                     forcing_from_wind, simulate, step_shallow_water, storm_forcing)
from .storm import OutOfWindowError, StormParams, WindModel, holland_profile, wind_pressure_field

__all__ = [
    "BasinGrid", "CFLError", "Forcing", "MeowField", "MomField", "OutOfWindowError", "SimConfig",
    "SimState", "SimulationError", "StormParams", "WindModel", "cfl_limit", "compute_mom",
    "forcing_from_wind", "group_moms", "holland_profile", "run_ensemble", "run_storm_meow",
    "simulate", "step_shallow_water", "storm_forcing", "tide_label", "uniform_basin",
    "wind_pressure_field",
]
