import numpy as np
import pytest

from uavpec.channel import build_channel_table
from uavpec.model import PhysicsConfig, UavBudget, generate_scenario, make_scenario


def device(x, y, bits=5e3, cycles=8e5, **kw):
    return dict(position=(float(x), float(y)), task_bits=bits, task_cycles=cycles, **kw)


@pytest.fixture
def table2_scenario():
    return generate_scenario(50, 4, seed=7)


@pytest.fixture
def small_scenario():
    return generate_scenario(5, 2, seed=11)


@pytest.fixture
def colocated_pair():
    """Two identical devices directly below the single hover position."""
    s = make_scenario([device(0, 0), device(0, 0)], [(0, 0)])
    return s, build_channel_table(s)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


__all__ = ["device", "PhysicsConfig", "UavBudget"]


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one summary line per acceptance criterion for the terminal report."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
