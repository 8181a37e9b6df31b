import numpy as np
import pytest

from vortexsheet.spectral import PeriodicGrid
from vortexsheet.initialdata import cosine_profile, random_analytic_profile


@pytest.fixture
def grid256():
    return PeriodicGrid(256)


@pytest.fixture
def grid128():
    return PeriodicGrid(128)


def cos_field(grid, k=1, amp=1.0, phase=0.0):
    return cosine_profile(grid, [(k, amp, phase)])


def sin_field(grid, k=1, amp=1.0):
    return cosine_profile(grid, [(k, amp, -np.pi / 2)])


def random_mean_zero(grid, seed, decay=0.35, kmax=None):
    rng = np.random.default_rng(seed)
    return random_analytic_profile(grid, rng, decay=decay, kmax=kmax)
