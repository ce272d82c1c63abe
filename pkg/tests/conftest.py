import pytest

from quintessence.dodeca import generate_group
from quintessence.puzzle import default_board
from quintessence.strata import rings

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def group():
    return generate_group()


@pytest.fixture(scope="session")
def board():
    return default_board()


@pytest.fixture(scope="session")
def cx(board):
    return board.complex


@pytest.fixture(scope="session")
def ring_list(cx):
    return rings(cx)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")
