import numpy as np
import pytest

from stochhjb.spectral import TorusGrid

_ACCEPTANCE = []


def record_criterion(number, title, passed, detail):
    _ACCEPTANCE.append((number, title, bool(passed), detail))


@pytest.fixture
def grid():
    return TorusGrid(1, 128)


@pytest.fixture
def grid2():
    return TorusGrid(2, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}: {detail}")
