from pathlib import Path

import pytest

from fringeworks import (
    EnvironmentSpec,
    ExperimentGeometry,
    initial_state,
    integrate,
)
from fringeworks.units import UnitSystem

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"
DATA = REPO / "data"


@pytest.fixture(scope="session")
def nat():
    return UnitSystem.natural()


@pytest.fixture(scope="session")
def fig_geometry():
    return ExperimentGeometry(L0=2.0, sigma_x0=0.5)


@pytest.fixture(scope="session")
def fig2_env():
    return EnvironmentSpec.qbm(gamma0=0.001, kBT=300.0)


@pytest.fixture(scope="session")
def fig2_trajectory(fig_geometry, fig2_env):
    s0 = initial_state(fig_geometry, "paper")
    return integrate(s0, fig2_env, 1.5, tol=1e-9)


@pytest.fixture(scope="session")
def isolated_trajectory(fig_geometry):
    s0 = initial_state(fig_geometry, "physical")
    return integrate(s0, EnvironmentSpec.isolated(), 8.0, tol=1e-9)
