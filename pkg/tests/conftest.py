import numpy as np
import pytest

from oscfield.modes import ModeSet


@pytest.fixture
def two_modes():
    """Two modes with unrelated directions and frequencies."""
    return ModeSet(s=np.array([1, -1]),
                   kappa=np.array([[0.7, 0.0, 0.0], [0.0, 0.0, 1.3]]),
                   volume=2.5)


@pytest.fixture
def three_modes():
    """Two helicities plus a skew third mode, incommensurate frequencies."""
    return ModeSet(s=np.array([1, -1, 1]),
                   kappa=np.array([[0.9, 0.0, 0.0],
                                   [0.0, 0.0, 1.1],
                                   [0.0, 1.0, 0.2]]),
                   volume=3.0)
