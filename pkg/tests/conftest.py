import json
from pathlib import Path

import pytest

from sonclyap.poly import DynSystem

SYSTEMS = Path(__file__).resolve().parent.parent / "systems"


def load(name):
    data = json.loads((SYSTEMS / f"{name}.json").read_text())
    return DynSystem.parse(data["odes"], data["vars"]), data


@pytest.fixture
def systems_dir():
    return SYSTEMS


@pytest.fixture
def circuit3():
    return load("circuit3")[0]


@pytest.fixture
def pendulum():
    return load("pendulum")[0]


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(acceptance_log.LINES):
            terminalreporter.write_line(acceptance_log.LINES[k])
