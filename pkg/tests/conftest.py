import numpy as np
import pytest

import levmap as lm

# The nine benchmark parameter pairs used throughout: (phi_star, omega),
# dynamical core flag, periodic flag, deterministic exponent.
BENCHMARK_ROWS = [
    (0.845, 0.557, True, False, 0.340),
    (0.795, 0.390, True, False, 0.400),
    (0.904, 0.627, True, False, 0.552),
    (0.821, 0.439, True, True, -0.158),
    (0.944, 0.826, True, True, -0.122),
    (0.766, 0.323, True, True, -0.046),
    (0.258, 0.837, False, True, -0.248),
    (0.908, 0.804, False, True, -0.362),
    (0.541, 0.227, False, True, -0.380),
]


@pytest.fixture(scope="session")
def chaotic_params():
    return lm.make_params(0.845, 0.557, 1000.0)


@pytest.fixture(scope="session")
def chaotic_kernel(chaotic_params):
    return lm.NoiseKernel(chaotic_params)


@pytest.fixture(scope="session")
def periodic_params():
    return lm.make_params(0.258, 0.837, 1000.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240511)
