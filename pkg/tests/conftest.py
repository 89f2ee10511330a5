import numpy as np
import pytest

import neharilab as nl
from neharilab.extremal import estimate_lambda_star


@pytest.fixture(scope="session")
def params():
    return nl.validate(nl.ProblemParams())


@pytest.fixture(scope="session")
def grid():
    # test-scale grid: small enough for fast solves, fine enough for oracles
    return nl.build_radial_grid(16.0, 128, 2.0)


@pytest.fixture(scope="session")
def gaussian(grid):
    return nl.sample_profile("gaussian", 1.0, grid)


@pytest.fixture(scope="session")
def estimate(params, grid):
    return estimate_lambda_star(params, grid)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
