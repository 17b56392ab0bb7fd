import numpy as np
import pytest

import cmaflow as cf


@pytest.fixture(scope="session")
def disc_scheme():
    """Unit disc (n = 1) at h = 0.05, single axis frame."""
    return cf.make_scheme(cf.ball(1), 0.05)


@pytest.fixture(scope="session")
def disc_scheme_coarse():
    return cf.make_scheme(cf.ball(1), 0.1)


@pytest.fixture(scope="session")
def ball2_scheme():
    """Unit ball in C^2 at h = 0.1 with 4 random frames plus the axis frame."""
    return cf.make_scheme(cf.ball(2), 0.1, K=4, seed=0)
