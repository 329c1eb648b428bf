import math

import numpy as np
import pytest

from resetloop.presets import precision_stage

TWO_PI = 2 * math.pi


def hz(f):
    return TWO_PI * f


@pytest.fixture(scope="session")
def plant():
    return precision_stage()


def rel(a, b):
    return abs(a - b) / abs(b)


def wrap_deg(x):
    return (x + 180.0) % 360.0 - 180.0


def angle_deg(z):
    return math.degrees(np.angle(z))


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
