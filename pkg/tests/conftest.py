import numpy as np
import pytest

from cmera.gaussian import GaussianState
from cmera.profiles import EntanglerProfile, cft_profile, sharp_profile, smooth_profile


@pytest.fixture(scope="session")
def smooth():
    return smooth_profile(EntanglerProfile(lam=1.0))


@pytest.fixture(scope="session")
def cft():
    return cft_profile(1.0)


@pytest.fixture(scope="session")
def sharp():
    return sharp_profile(1.0)


@pytest.fixture(scope="session")
def state(smooth):
    return GaussianState(smooth)


@pytest.fixture(scope="session")
def cft_state(cft):
    return GaussianState(cft)


def gaussian(x):
    return np.exp(-np.asarray(x, dtype=float) ** 2)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
