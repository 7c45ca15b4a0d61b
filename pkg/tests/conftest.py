import numpy as np
import pytest

from nonlocal_neumann.measures import stable_measure
from nonlocal_neumann.nonlocal_op import Grid


@pytest.fixture
def smooth_f():
    return lambda x: np.exp(-((x - 1.0) ** 2))


@pytest.fixture
def small_grid():
    return Grid(4.0, 81)


@pytest.fixture
def stable():
    return stable_measure
