import os

import numpy as np
import pytest

from solarsched.schemas.energy import EnergySeries
from solarsched.schemas.system import SystemConfig
from solarsched.utils.synthetic import synthetic_series

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SAMPLE_TRACE = os.path.join(REPO_ROOT, "data", "synthetic_4day.csv")
SAMPLE_IRRADIANCE = os.path.join(REPO_ROOT, "data", "synthetic_4day_irradiance.csv")
DEFAULT_CONFIG = os.path.join(REPO_ROOT, "config", "default.cfg")


@pytest.fixture
def default_cfg():
    return SystemConfig.from_path_losses((78.0, 92.0, 100.0))


@pytest.fixture
def small_cfg():
    """Two gateways, four-slot frames"""
    return SystemConfig.from_path_losses((78.0, 92.0), slots_per_frame=4)


@pytest.fixture(scope="session")
def cloudy_series():
    return synthetic_series(SystemConfig.from_path_losses(), days=6, seed=3)


@pytest.fixture(scope="session")
def sunny_series():
    return synthetic_series(SystemConfig.from_path_losses(), days=5, seed=1, sunny=True)


@pytest.fixture
def write_csv(tmp_path):
    """Write CSV text lines to a file and return its path"""

    def _write(lines, name="trace.csv"):
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return str(path)

    return _write


def random_frame(rng: np.random.Generator, K: int, low_kj: float = 0.5, high_kj: float = 20.0) -> EnergySeries:
    return EnergySeries.measured(rng.uniform(low_kj, high_kj, K) * 1000.0)
