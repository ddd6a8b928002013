import numpy as np
import pytest

from mommi_ptc.dpe import TrainConfig, train_on_lut
from mommi_ptc.momdevice import MmiGeometry, build_design, generate_lut


@pytest.fixture(scope="session")
def device4():
    """Reference 4x4 device with four pads."""
    return build_design(MmiGeometry.default(4), d=4)


@pytest.fixture(scope="session")
def lut4(device4):
    return generate_lut(device4, 3)


@pytest.fixture(scope="session")
def trained(lut4):
    """Surrogate trained on the full 3-bit LUT with the default recipe (about 30 s)."""
    return train_on_lut(lut4, seed=0, config=TrainConfig(seed=0))


@pytest.fixture(scope="session")
def surrogate(trained):
    return trained[0]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
