import numpy as np
import pytest

from surgerisk.surge_sim import BasinGrid, StormParams, uniform_basin

POLE = (-89.8, 29.2)


def coastal_elevation(coast_y=-8000.0, amp=3000.0, wavelength=15000.0, shelf=-10.0,
                      sea_slope=5e-4, land_slope=5e-4, wall=None):
    def fn(x, y):
        yc = coast_y + amp * np.sin(x / wavelength)
        sea = np.maximum(shelf, (y - yc) * sea_slope)
        land = (y - yc) * land_slope if wall is None else np.full_like(y, wall)
        return np.where(y < yc, sea, land)
    return fn


@pytest.fixture(scope="session")
def small_basin():
    return uniform_basin("small", POLE, 8000.0, 500.0, 50, 72, coastal_elevation())


@pytest.fixture(scope="session")
def walled_basin():
    return uniform_basin("walled", POLE, 8000.0, 500.0, 50, 72,
                         coastal_elevation(shelf=-10.0, wall=20.0))


def landfall_storm(dp=60.0, rmax=20.0, heading=0.0, speed=6.0, dx=0.0, category=4, tide=2.0,
                   landfall_hour=6.0, duration_h=10.0, storm_id="s0"):
    lat = POLE[1] - 8000.0 / 111195.0
    lon = POLE[0] + dx / 97000.0
    return StormParams.from_landfall(dp, rmax, heading, speed, lon, lat, category, tide,
                                     landfall_hour=landfall_hour, duration_h=duration_h,
                                     storm_id=storm_id)


def flat_basin(n_rings=3, n_sectors=3, r0=1000.0, dr=1000.0, depth=10.0, friction=0.0):
    edges = r0 + dr * np.arange(n_rings + 1)
    return BasinGrid("flat", POLE, edges, n_sectors, np.full((n_rings, n_sectors), -depth), friction)


@pytest.fixture(scope="session")
def synth_bundle():
    from surgerisk.cli_io import synth_generate
    return synth_generate(0, "small")


@pytest.fixture(scope="session")
def synth_config(synth_bundle, tmp_path_factory):
    return synth_bundle.write(tmp_path_factory.mktemp("synth"))
