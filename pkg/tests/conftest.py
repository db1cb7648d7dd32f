import numpy as np
import pytest

from searoute import depthmap
from searoute.route import ShipSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ship():
    return ShipSpec()


@pytest.fixture(scope="session")
def open_grid():
    return depthmap.gen_open_map(500.0, 20.0)


@pytest.fixture(scope="session")
def wall_grid():
    return depthmap.gen_wall_map(500.0, 20.0)


@pytest.fixture(scope="session")
def labyrinth_grid():
    return depthmap.gen_labyrinth_map(500.0, 20.0, 2)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"CRITERION {n:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
