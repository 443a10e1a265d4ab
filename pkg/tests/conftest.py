"""
shared fixtures for the diskbvp tests
"""

import numpy as np
import pytest

from diskbvp.api.config import RunConfig
from diskbvp.data.samples import cosine_datum, identity_coefficient, random_accretive


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def identity():
    """scalar identity coefficients"""
    return identity_coefficient(1, 0)


@pytest.fixture
def accretive(rng):
    """random complex accretive coefficients with sup |A - I| = 0.3"""
    return random_accretive(1, 8, rng, amplitude=0.3, bandwidth=2)


@pytest.fixture
def cosine():
    """cos theta datum for K = 4"""
    return cosine_datum(1, 4)


@pytest.fixture
def small_config(tmp_path):
    """cheap configuration writing into a temporary directory"""
    return RunConfig(K=3, samples=1, output_dir=str(tmp_path / "out"))
