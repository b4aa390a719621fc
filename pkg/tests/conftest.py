"""Shared fixtures: small grids, the interacting model, and the two-node oracle."""

import numpy as np
import pytest

from hfbflow import make_grid, pair_kernel, sample_field
from hfbflow.oracle import two_mode_fixture

BOX = 2.0 * np.pi
GAUSSIAN_PAIR = {"kind": "gaussian", "amplitude": 0.5, "width": 0.3}


@pytest.fixture(scope="session")
def grid8():
    return make_grid(1, BOX, 8)


@pytest.fixture(scope="session")
def grid16():
    return make_grid(1, BOX, 16)


@pytest.fixture(scope="session")
def model16(grid16):
    """(grid, V, v_kernel) for the standard interacting 1D setup."""
    V = sample_field(grid16, {"kind": "zero"})
    v_kernel = pair_kernel(grid16, GAUSSIAN_PAIR)
    return grid16, V, v_kernel


@pytest.fixture(scope="session")
def model8(grid8):
    V = sample_field(grid8, {"kind": "zero"})
    v_kernel = pair_kernel(grid8, GAUSSIAN_PAIR)
    return grid8, V, v_kernel


@pytest.fixture(scope="session")
def two_mode_reference():
    """Regenerated brute-force two-node trajectory (shared; ~1 s to build)."""
    return two_mode_fixture(T=0.01, dt=1e-6, samples=4)
