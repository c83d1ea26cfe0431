import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(Path(__file__).resolve().parent))

from tankrover.geometry import GridMeta, Pose2D
from tankrover.mapio import load_scenario_file
from tankrover.sim import Rect, TankWorld


@pytest.fixture(scope="session")
def repo_root():
    return REPO


@pytest.fixture(scope="session")
def scenario_path():
    return REPO / "scenarios" / "default.scenario.json"


@pytest.fixture()
def default_scenario(scenario_path):
    # fresh object per test: scenarios are mutable (debris set shrinks)
    return load_scenario_file(scenario_path)


@pytest.fixture()
def empty_tank_world():
    """10 x 5 m empty tank with a 0.1 m debris grid."""
    bounds = Rect(0.0, 0.0, 10.0, 5.0)
    meta = GridMeta(resolution=0.1, width=100, height=50, origin=Pose2D(0.0, 0.0, 0.0))
    return TankWorld(bounds=bounds, obstacles=[], debris_meta=meta)
