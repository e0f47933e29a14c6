import numpy as np
import pytest

from blocksampler import build_line_dictionary, build_row_column_dictionary


@pytest.fixture(scope="session")
def toy():
    """3x3 rows-then-columns dictionary (6 blocks of 3 pixels)."""
    return build_row_column_dictionary(3, 3)


@pytest.fixture(scope="session")
def lines8():
    return build_line_dictionary(8, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_simplex(rng, size):
    return rng.dirichlet(np.ones(size))


def center_dirac(n1, n2):
    p = np.zeros(n1 * n2)
    p[(n1 // 2) * n2 + n2 // 2] = 1.0
    return p
