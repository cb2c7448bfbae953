"""
Shared fixtures: small models that keep every test in the sub-second range
"""
import numpy as np
import pytest

from selgauss.config import SamplerConfig
from selgauss.core.gaussian import CorrelationSpec, GridSpec
from selgauss.models.selection import StationaryPriorSpec, expand_stationary
from selgauss.models.selection_sets import IntervalUnion


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fast_sampler():
    return SamplerConfig(block_size=10, n_burnin=200, n_thin=2)


@pytest.fixture
def bimodal_spec():
    """Symmetric bimodal prior on a 12-node line"""
    return StationaryPriorSpec(
        mu=0.0,
        sigma2=1.0,
        gamma=0.9,
        corr=CorrelationSpec("second_order_exponential", (3.0,)),
        grid=GridSpec((12,)),
        a_set=IntervalUnion([(None, -0.4), (0.4, None)]),
    )


@pytest.fixture
def bimodal_model(bimodal_spec):
    return expand_stationary(bimodal_spec)
