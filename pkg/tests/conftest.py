import pytest

from travelsample.io import load_fixture
from travelsample.montecarlo import (
    COMMUTER_CONFIG,
    COVERAGE_CONFIG,
    SMALL_CITY,
    synth_population,
)

# filled by test_acceptance; printed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fixture_survey():
    """Bundled survey: households with trip counts, trips, zone partition."""
    return load_fixture()


@pytest.fixture(scope="session")
def small_city():
    return synth_population(SMALL_CITY)


@pytest.fixture(scope="session")
def coverage_population():
    return synth_population(COVERAGE_CONFIG)


@pytest.fixture(scope="session")
def commuter_population():
    return synth_population(COMMUTER_CONFIG)
