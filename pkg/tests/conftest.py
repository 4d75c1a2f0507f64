import pytest
from hypothesis import settings

from shipland.simkit import ScenarioConfig
from shipland.vehicle import VehicleParams

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def params() -> VehicleParams:
    return VehicleParams()


@pytest.fixture
def landing_config() -> ScenarioConfig:
    return ScenarioConfig()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
