import warnings

import numpy as np
import pytest

from floquet_vqe.model import driven_spin_half

DELTA, OMEGA = 1.0, 2.5


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _quiet_penalty_warnings():
    # the benchmark lambda is knowingly below some loss widths; tests that care check explicitly
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="deflation weight")
        yield


def benchmark(amplitude: float):
    return driven_spin_half(DELTA, amplitude, OMEGA)
