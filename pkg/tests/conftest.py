import math

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_poses(rng, count, extent=8.0):
    xy = rng.uniform(-extent, extent, (count, 2))
    theta = rng.uniform(-math.pi, math.pi, count)
    return np.column_stack([xy, theta])
