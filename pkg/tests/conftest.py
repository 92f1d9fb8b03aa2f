import numpy as np
import pytest

from floorpricer import kernels


@pytest.fixture(scope="session", autouse=True)
def jit_warmup():
    """Compile the hot-path kernels once so no test times compilation."""
    kernels.warmup(2, 0)
    kernels.warmup(2, 3)
    kernels.warmup(3, 0)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))
