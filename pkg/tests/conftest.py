import math

import numpy as np
import pytest

from dirac_delay.core import PotentialPair

HALF_PI = math.pi / 2


def smooth_potential(seed, a=HALF_PI, M=512, modes=4, size=0.8):
    """Random complex cosine series with max(||q||, ||p||) = size."""
    rng = np.random.default_rng(seed)
    x = (np.arange(M + 1) / M)[None, :]
    k = np.arange(modes)[:, None]
    basis = np.cos(np.pi * k * x)
    coef = [(rng.standard_normal((modes, 1)) + 1j * rng.standard_normal((modes, 1))) / (1 + k)
            for _ in range(2)]
    q, p = ((c * basis).sum(0) for c in coef)
    pp = PotentialPair(a, q, p)
    h = pp.h
    norm = max(math.sqrt(h * np.sum(np.abs(v) ** 2)) for v in (q, p))
    return PotentialPair(a, q * size / norm, p * size / norm)


@pytest.fixture
def smooth():
    return smooth_potential
