import numpy as np
import pytest

from maxgauss import BorelSet, SmoothingParams, build_g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def half_line_g():
    p = SmoothingParams(4.0, 0.5, 1.0, 1)
    return p, build_g(BorelSet.half_line(0.0), p)
