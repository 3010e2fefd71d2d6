import math

import pytest

from isingchain import ChainSpec, normalize_chain
from isingchain.planner import dp_solve

HALF_PI = 0.5 * math.pi


@pytest.fixture(scope="session")
def example2_chain():
    # J12 = 91 Hz, J23 = 15 Hz, J34 = 55 Hz; time unit 1/J23
    return normalize_chain(ChainSpec((91.0, 15.0, 55.0)), ref_index=1)


@pytest.fixture(scope="session")
def example2_plan(example2_chain):
    return dp_solve(example2_chain)
