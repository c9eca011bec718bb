import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)


def random_state(n, seed):
    """A uniformly random chain state of length n."""
    gen = np.random.default_rng(seed)
    return gen.uniform(-np.pi, np.pi, n)
