import pytest
from hypothesis import settings

from crowdaoi.harness.presets import asymmetric_process, deterministic_process, symmetric_process

settings.register_profile("repro", derandomize=True)
settings.load_profile("repro")

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def det10():
    return deterministic_process()


@pytest.fixture
def sym():
    return symmetric_process()


@pytest.fixture
def asym():
    return asymmetric_process()


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one verdict line per acceptance criterion."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
