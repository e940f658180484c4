import numpy as np
import pytest

from sislab import Grid, preset_fig0a, preset_homogeneous, preset_moderate


@pytest.fixture(scope="session")
def grid400():
    return Grid(400)


@pytest.fixture(scope="session")
def fig0a(grid400):
    return preset_fig0a(grid400)


@pytest.fixture(scope="session")
def homog():
    """(Lambda, beta, gamma, mu) = (3, 1, 1, 1): R0 = 1.5, EE (2, 1)."""
    return preset_homogeneous(Grid(40), 3.0, 1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def homog_dfe():
    return preset_homogeneous(Grid(40), 3.0, 0.5, 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record ``(number, passed, detail)`` for the acceptance summary."""

    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
