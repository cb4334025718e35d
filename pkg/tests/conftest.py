import numpy as np
import pytest

from phasemem.encoding import outer_product_weights

STORED_PATTERNS = np.array([[1, -1, 1, -1], [1, 1, -1, -1]])


def random_symmetric(n, rng, mask=None):
    k = np.triu(rng.uniform(-1, 1, (n, n)), 1)
    k = k + k.T
    if mask is not None:
        k = np.where(mask, k, 0.0)
    return k


def fd_grad(f, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


@pytest.fixture
def two_pattern_k():
    return outer_product_weights(STORED_PATTERNS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
