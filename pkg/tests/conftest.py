import numpy as np
import pytest

from l4dict import gen_haar_orthogonal, make_rng


@pytest.fixture
def rng():
    return make_rng(20240917)


def random_signed_permutation(n, rng):
    perm = rng.permutation(n)
    signs = rng.choice([-1.0, 1.0], size=n)
    p = np.zeros((n, n))
    p[perm, np.arange(n)] = signs
    return p


def haar(n, seed):
    return gen_haar_orthogonal(n, make_rng(seed))
