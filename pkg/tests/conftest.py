import numpy as np
import pytest

from annealsim.schedule import bundled_schedule

_REPORT: list[str] = []


@pytest.fixture(scope="session")
def sched():
    return bundled_schedule()


@pytest.fixture
def report():
    """Record one acceptance line; printed immediately and again in the terminal summary."""

    def emit(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        _REPORT.append(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_REPORT):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
