import numpy as np
import pytest

from udwqc.bhz import BhzParams

# gap of order 1 eV: edge states decay within a couple of sites
STRONG = BhzParams(1.0, 1.0, 1.0)


@pytest.fixture
def strong_params():
    return STRONG


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
