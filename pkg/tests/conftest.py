from __future__ import annotations

import pytest

from cavityforce.dielectric import load_material
from cavityforce.profiles import HELIUM_WATER_CAVITY

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def water():
    return load_material("water")


@pytest.fixture(scope="session")
def helium():
    return load_material("helium")


@pytest.fixture(scope="session")
def cavity():
    return HELIUM_WATER_CAVITY


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
