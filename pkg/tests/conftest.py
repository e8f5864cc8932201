import numpy as np
import pytest

from fkgravity import BallDomain, Prism, Scene


@pytest.fixture
def cube_scene():
    """10 km ball, cube [0, 100]^3 m at 2000 kg/m^3, kilometer internal units."""
    return Scene(BallDomain([0.0, 0.0, 0.0], 1e4), [Prism([0, 0, 0], [100, 100, 100], 2000.0)],
                 length_scale=1000.0)


@pytest.fixture
def small_scene():
    """1 km ball with a 200 m cube: short walks for fast statistical checks."""
    return Scene(BallDomain([0.0, 0.0, 0.0], 1000.0), [Prism([-100, -100, -100], [100, 100, 100], 2000.0)],
                 length_scale=1000.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
