import math

import numpy as np
import pytest

from freqkey.channel import ChannelParams
from freqkey.config import default_config
from freqkey.measurement import DetectorParams
from freqkey.source import SourceParams

# Default physical scales used across the suite (angular frequencies, rad/s).
OMEGA0 = 1.0e15
OMEGA1 = 1.0000001e15  # exactly representable; separation exactly 1e8
DELTA_OMEGA = OMEGA1 - OMEGA0
PERIOD = 2.0 * math.pi / DELTA_OMEGA
INV_SQRT2 = 1.0 / math.sqrt(2.0)


@pytest.fixture
def base_config():
    return default_config()


@pytest.fixture
def source_params():
    return SourceParams(tau_pi=1e-12, tau_r=1e-10, sigma=1e7, omega0=OMEGA0, omega1=OMEGA1)


@pytest.fixture
def ideal_channel():
    return ChannelParams()


@pytest.fixture
def detector_params():
    return DetectorParams(tau_det=1e-9, window=10.0 * PERIOD)


def random_amplitude_pair(rng):
    """Random normalized complex amplitude pair with uniform phases."""
    theta = rng.uniform(0.0, 0.5 * math.pi)
    phi0, phi1 = rng.uniform(0.0, 2.0 * math.pi, size=2)
    return (
        math.cos(theta) * np.exp(1j * phi0),
        math.sin(theta) * np.exp(1j * phi1),
    )
