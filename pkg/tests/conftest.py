import pytest

from ris_overlay.config import ScenarioConfig
from ris_overlay.geometry import ArrayConfig, FarFieldGridSpec
from ris_overlay.scenario import Scenario, steering_for


@pytest.fixture(scope="session")
def default_config():
    return ArrayConfig()


@pytest.fixture(scope="session")
def default_grid():
    return FarFieldGridSpec()


@pytest.fixture(scope="session")
def steering(default_config, default_grid):
    return steering_for(default_config, default_grid)


@pytest.fixture(scope="session")
def scenario():
    return Scenario(ScenarioConfig())


@pytest.fixture(scope="session")
def exhaustive(scenario):
    from ris_overlay.search import exhaustive_search

    return exhaustive_search(scenario)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
