import numpy as np
import pytest

from growing_consensus import inflow, kernels
from growing_consensus.growth import GrowthRate
from growing_consensus.micro import SimConfig


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def make_config():
    def _make(**kw):
        base = dict(kernel=kernels.type1_constant(), rate=GrowthRate.constant(0.0),
                    profile=inflow.constant(0.0), N0=1.0, dt=0.01, t_end=0.1, rho=10.0)
        base.update(kw)
        return SimConfig(**base)

    return _make
