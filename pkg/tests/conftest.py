import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from choquard import GridSpec, ScalarField


@pytest.fixture(scope="session")
def grid3_small():
    return GridSpec(3, 8.0, 32)


@pytest.fixture(scope="session")
def grid1():
    return GridSpec(1, 16.0, 256)


def smooth_random_field(grid: GridSpec, rng, sigma_cells: float = 2.0) -> ScalarField:
    """Band-limited random field with a decaying envelope (boundary-safe)."""
    noise = gaussian_filter(rng.standard_normal(grid.shape), sigma_cells, mode="wrap")
    envelope = np.exp(-grid.radius_sq() / (2.0 * (grid.half_extent / 2.5) ** 2))
    return ScalarField(grid, noise * envelope)


def smooth_random_nonneg(grid: GridSpec, rng, sigma_cells: float = 2.0) -> ScalarField:
    f = smooth_random_field(grid, rng, sigma_cells)
    return ScalarField(grid, np.abs(f.values))
