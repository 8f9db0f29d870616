import numpy as np
import pytest

from quasistep.spaces import SpaceConfig

ACCEPTANCE_LINES = []


def record(number, name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def sp16():
    return SpaceConfig(16)


@pytest.fixture
def sp64():
    return SpaceConfig(64)


@pytest.fixture
def sp128():
    return SpaceConfig(128)
