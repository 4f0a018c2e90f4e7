import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

POTENCY = np.array([
    95.661, 102.259, 103.135, 99.827, 98.830, 94.887, 103.362, 94.117, 96.665,
    106.234, 103.735, 104.317, 101.807, 98.198, 98.186, 107.872, 99.987, 103.051,
    106.445, 95.922, 102.956, 101.596, 96.806, 107.041, 92.589,
])


@pytest.fixture
def potency():
    return POTENCY.copy()


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running Monte Carlo checks")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
