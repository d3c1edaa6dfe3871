import numpy as np
import pytest

from dfsl import FunctionalDataset


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_data():
    """Small random dataset: 4 samples, 6 time points, 3 channels."""
    values = np.random.default_rng(42).standard_normal((4, 6, 3))
    return FunctionalDataset(values)
