import numpy as np
import pytest

from eitsim import presets


@pytest.fixture
def lambda_spec():
    """Reference three-level Lambda system."""
    return presets.three_level_lambda()


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
