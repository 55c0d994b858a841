import math

import pytest

from cornerpencil.acceptance import dirichlet_pencil, halfplane_pencil

ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def p7():
    return halfplane_pencil()


@pytest.fixture(scope="session")
def pd():
    return dirichlet_pencil()


@pytest.fixture(scope="session")
def model7():
    from cornerpencil.extract import build_model
    return build_model(halfplane_pencil(), 4j / 3, 1j)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
