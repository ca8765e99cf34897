import numpy as np
import pytest

from lcflow.fields import Grid2D


@pytest.fixture
def grid32():
    return Grid2D(32, 2 * np.pi)


@pytest.fixture
def grid64():
    return Grid2D(64, 2 * np.pi)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
