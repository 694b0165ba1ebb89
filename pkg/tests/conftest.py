import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nltsa.systems import integrate_flow

settings.register_profile(
    "nltsa", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("nltsa")


@functools.lru_cache(maxsize=None)
def lorenz(n: int, dt: float = 0.01, discard: int = 1000):
    """Lorenz trajectory (standard parameters) from a fixed start, transient dropped."""
    return integrate_flow("lorenz", [1.0, 1.0, 20.0], dt, n, discard)


def cantor_endpoints(level: int) -> np.ndarray:
    """Left endpoints of the 2**level intervals of the middle-thirds construction."""
    pts = np.array([0.0])
    for k in range(1, level + 1):
        pts = np.concatenate([pts, pts + 2.0 / 3.0 ** k])
    return np.sort(pts)


def sine(n: int, period: float, amplitude: float = 1.0) -> np.ndarray:
    return amplitude * np.sin(2 * np.pi * np.arange(n) / period)


@pytest.fixture(scope="session")
def lorenz_x():
    return lorenz(20000).values[:, 0]


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split("#")[1].split()[0])):
            terminalreporter.write_line(line)
