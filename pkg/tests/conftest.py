import numpy as np
import pytest


def rand_complex(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def rand_psd(rng, n, r):
    V = rand_complex(rng, (n, r))
    Q = V @ V.conj().T
    return 0.5 * (Q + Q.conj().T), V


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
