import math

import numpy as np
import pytest

from multibeam.array import ChannelSimConfig, sample_rician_channel
from multibeam.subbeam import SubbeamPair, conventional_beam, steer


def unit(z):
    return z / np.linalg.norm(z)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def default_pair(theta_deg=-6.45, M=16, rho=0.5):
    return SubbeamPair(conventional_beam(M, M, 0.0),
                       steer(conventional_beam(12, M, 0.0), math.radians(theta_deg)), rho)


def random_pair(rng, M=16, rho=0.5):
    return SubbeamPair(unit(crandn(rng, M)), unit(crandn(rng, M)), rho)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def channel():
    return sample_rician_channel(ChannelSimConfig(), [99, 0]).matrix


ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance_line():
    """Record the one-line verdict of an acceptance criterion."""
    def record(number, passed, detail):
        ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[number])
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
