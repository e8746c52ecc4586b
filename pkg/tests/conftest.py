import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_joint(rng, shape, zeros=0.0):
    """Random pmf of the given shape; ``zeros`` is the chance of a zero cell."""
    w = rng.random(shape) ** 2
    if zeros:
        w[rng.random(shape) < zeros] = 0.0
        if w.sum() == 0:
            w.flat[0] = 1.0
    return w / w.sum()
