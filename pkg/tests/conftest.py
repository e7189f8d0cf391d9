import time

import pytest

from ectkit import build_geometry, build_grid
from ectkit.forward import CapacitanceSimulator
from ectkit.pipeline import ExperimentConfig, run_experiment


@pytest.fixture(scope="session")
def geometry():
    return build_geometry(8, 76.0, 30.0)


@pytest.fixture(scope="session")
def grid(geometry):
    return build_grid(48, geometry)


@pytest.fixture(scope="session")
def simulator(geometry, grid):
    return CapacitanceSimulator(geometry, grid)


@pytest.fixture(scope="session")
def sensitivity(simulator):
    return simulator.sensitivity()


@pytest.fixture(scope="session")
def calibration(simulator):
    return simulator.calibration()


@pytest.fixture(scope="session")
def experiment(tmp_path_factory):
    """Default full-scale experiment, run once; (report, out_dir, wall_seconds)."""
    out_dir = tmp_path_factory.mktemp("experiment")
    t0 = time.perf_counter()
    report = run_experiment(ExperimentConfig(), out_dir=out_dir)
    wall = time.perf_counter() - t0
    return report, out_dir, wall
