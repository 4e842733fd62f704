import json
from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def cnot_flips():
    data = json.loads((FIXTURES / "cnot_flips.json").read_text())
    flipped = {int(k): set(v) for k, v in data["flipped"].items()}
    combined = {int(k): tuple(v) for k, v in data["combined"].items()}
    return flipped, combined


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
