import numpy as np
import pytest

from paircause import ObservedDataset, WinStrict


@pytest.fixture
def t4():
    """Four units, arms (1,1,0,0), outcomes (3,1,2,0): every pairwise
    strict-win quantity is hand-enumerable."""
    return ObservedDataset(treat=[1, 1, 0, 0], y=[3.0, 1.0, 2.0, 0.0],
                           ids=["u1", "u2", "u3", "u4"])


@pytest.fixture
def t4_spec():
    return WinStrict()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
