import numpy as np
import pytest

from anchorqp import _kernels as kern


@pytest.fixture(params=kern.available_backends())
def kernel_backend(request):
    """Run a test once per available kernel backend."""
    previous = kern.active_backend()
    kern.select_backend(request.param)
    yield request.param
    kern.select_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
