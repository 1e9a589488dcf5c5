import numpy as np
import pytest

from ecra_sim.params import SystemConfig, derive


@pytest.fixture
def small_cfg():
    """Scaled-down scenario for fast structural tests."""
    return SystemConfig(packet_symbols=100, slots_per_vf=20,
                        window_packets=20, window_shift_packets=5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def default_cfg():
    return SystemConfig()


@pytest.fixture
def default_dp(default_cfg):
    return derive(default_cfg)
