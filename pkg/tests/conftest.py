import math

import pytest

from beamcov.config import RadioConfig
from beamcov.env_stats import EnvParams, Uniform
from beamcov.geometry import BeamSpec, PolarPoint


@pytest.fixture
def env():
    """Reference urban environment: 2e-4 buildings/m^2, L~U[40,60], W~U[30,50]."""
    return EnvParams(2e-4, Uniform(40.0, 60.0), Uniform(30.0, 50.0))


@pytest.fixture
def radio():
    return RadioConfig().params()


@pytest.fixture
def user():
    return PolarPoint.from_degrees(90.0, 50.0)


def beam(theta_deg, mu_deg=10.0):
    gain = {10.0: 36.0, 30.0: 12.0}[float(mu_deg)]
    return BeamSpec.from_degrees(theta_deg, mu_deg, gain)


def deg(x):
    return math.radians(x)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
