import numpy as np
import pytest

from roimark import GrayImage


@pytest.fixture
def flat_image():
    return GrayImage(np.full((64, 64), 100, dtype=np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
