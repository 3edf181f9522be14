import os
from pathlib import Path

import numpy as np
import pytest

from nsmlab.initial import random_field
from nsmlab.spectral import SpectralField, make_grid
from nsmlab.systems import PlasmaState

ROOT = Path(__file__).resolve().parents[1]
os.environ.setdefault("NSMLAB_CALIBRATION", str(ROOT / "nsmlab_calibration.json"))


def single_mode(grid, k, comp=0, amp=1.0):
    """Real field amp*cos(k.x) in component comp: amp/2 at +k and -k."""
    data = np.zeros((3,) + grid.shape, dtype=complex)
    k = tuple(k) + (0,) * (grid.d - len(k))
    data[(comp,) + tuple(ki % grid.N for ki in k)] += 0.5 * amp
    data[(comp,) + tuple(-ki % grid.N for ki in k)] += 0.5 * amp
    return SpectralField(grid, data)


def random_state(grid, seed=0, amp=1.0, with_E=True, with_v=True):
    rng = np.random.default_rng(seed)
    v = random_field(grid, 0, amp, rng=rng) if with_v else None
    B = random_field(grid, 0, amp, rng=rng)
    E = random_field(grid, 0, 0.5 * amp, rng=rng) if with_E else None
    return PlasmaState(0.0, v, B, E)


@pytest.fixture
def g2():
    return make_grid(2, 16)


@pytest.fixture
def g3():
    return make_grid(3, 8)


def zeros(grid):
    return SpectralField.zeros(grid)
