"""Fixtures shared by the ilw_lab tests."""
from __future__ import annotations

import numpy as np
import pytest

from ilw_lab.soliton import SolitonParams, solve_transcendental
from ilw_lab.spectral_core import Field, Grid, band_limited_field, make_grid


@pytest.fixture(scope="session")
def grid() -> Grid:
    """Return the standard single-soliton box."""
    return make_grid(1024, 100.0)


@pytest.fixture(scope="session")
def fine_grid() -> Grid:
    """Return a finer box for faster solitons."""
    return make_grid(2048, 100.0)


@pytest.fixture(scope="session")
def small_grid() -> Grid:
    """Return a coarse box for random-field oracles."""
    return make_grid(128, 20.0)


@pytest.fixture
def rng() -> np.random.Generator:
    """Return a seeded generator."""
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def soliton() -> SolitonParams:
    """Return the c = delta = 1 soliton."""
    return solve_transcendental(1.0, 1.0)


@pytest.fixture
def random_fields(small_grid: Grid, rng: np.random.Generator) -> list[Field]:
    """Return 20 seeded band-limited fields with bandwidth N/8."""
    return [band_limited_field(small_grid, rng, small_grid.num_points // 8) for _ in range(20)]
