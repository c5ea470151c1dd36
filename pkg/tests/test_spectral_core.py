"""Test the grid, multipliers and norms."""
from __future__ import annotations

import numpy as np
import pytest

from ilw_lab.exceptions import InvalidParameter
from ilw_lab.spectral_core import (
    Field,
    Multiplier,
    band_limited_field,
    centered_dispersion,
    derivative,
    dispersion_w,
    inner_product,
    l2_norm,
    make_grid,
    sobolev_norm,
    tilbert,
    tilbert_dx,
    tilbert_dxx,
)


@pytest.mark.parametrize(("num_points", "length"), [(15, 10.0), (64, 0.0), (64, -1.0), (8, 10.0), (64, float("nan"))])
def test_make_grid_rejects(num_points, length) -> None:
    """Odd, tiny or non-positive grids are rejected."""
    with pytest.raises(InvalidParameter, match="Invalid grid"):
        make_grid(num_points, length)


def test_grid_layout() -> None:
    """Samples start at -L/2 and the Nyquist mode sits at index N/2."""
    grid = make_grid(16, 8.0)
    assert grid.spacing == 0.5
    assert grid.x[0] == -4.0
    assert grid.x[8] == 0.0
    assert grid.wavenumbers[grid.nyquist_index] == -8
    assert list(grid.wavenumbers[:3]) == [0, 1, 2]
    assert not grid.x.flags.writeable


def test_dispersion_at_zero_and_limits() -> None:
    """w(0) = 1/delta, w is even and approaches both surrogate laws."""
    assert dispersion_w(0.0, 2.0) == 0.5
    xi = np.array([0.01, 0.3, 2.0])
    np.testing.assert_array_equal(dispersion_w(xi, 1.0), dispersion_w(-xi, 1.0))
    assert abs(dispersion_w(50.0, 1.0) - 2 * np.pi * 50.0) < 1e-9
    small = 1e-4
    assert abs(centered_dispersion(small, 1.0) - (2 * np.pi * small) ** 2 / 3) < 1e-6 * (2 * np.pi * small) ** 2


def test_centered_dispersion_matches_direct_difference() -> None:
    """Away from zero the series branch agrees with w - 1/delta."""
    xi = np.linspace(0.005, 3.0, 200)
    np.testing.assert_allclose(centered_dispersion(xi, 0.7), dispersion_w(xi, 0.7) - 1 / 0.7, rtol=1e-10, atol=1e-14)


def test_dispersion_rejects_bad_delta() -> None:
    """Depth must be positive."""
    with pytest.raises(InvalidParameter, match="Depth"):
        dispersion_w(1.0, 0.0)


def test_derivative_of_mode(small_grid) -> None:
    """Spectral differentiation is exact on a resolved mode."""
    k = 2 * np.pi * 3 / small_grid.length
    f = Field.from_function(small_grid, lambda x: np.sin(k * x))
    np.testing.assert_allclose(derivative(small_grid, 1)(f).values, k * np.cos(k * small_grid.x), atol=1e-12)
    np.testing.assert_allclose(derivative(small_grid, 2)(f).values, -k * k * f.values, atol=1e-11)


def test_tilbert_dx_on_cosine(small_grid) -> None:
    """T d/dx maps cos(kx) to -w(k/L) cos(kx)."""
    xi = 5 / small_grid.length
    f = Field.from_function(small_grid, lambda x: np.cos(2 * np.pi * xi * x))
    expected = -dispersion_w(xi, 1.0) * f.values
    np.testing.assert_allclose(tilbert_dx(small_grid, 1.0)(f).values, expected, atol=1e-12)


def test_tilbert_on_cosine(small_grid) -> None:
    """T maps cos to -coth(2 pi delta xi) sin."""
    xi = 2 / small_grid.length
    f = Field.from_function(small_grid, lambda x: np.cos(2 * np.pi * xi * x))
    expected = -np.sin(2 * np.pi * xi * small_grid.x) / np.tanh(2 * np.pi * 0.5 * xi)
    np.testing.assert_allclose(tilbert(small_grid, 0.5)(f).values, expected, atol=1e-12)


def test_compositions_agree_on_mean_free_fields(small_grid, rng) -> None:
    """T composed with d/dx matches the fused multipliers away from the mean."""
    f = band_limited_field(small_grid, rng, 16)
    dx = derivative(small_grid, 1)
    t = tilbert(small_grid, 1.0)
    np.testing.assert_allclose(t(dx(f)).values, tilbert_dx(small_grid, 1.0)(f).values, atol=1e-11)
    np.testing.assert_allclose(dx(tilbert_dx(small_grid, 1.0)(f)).values, tilbert_dxx(small_grid, 1.0)(f).values, atol=1e-10)
    np.testing.assert_allclose((dx @ t)(f).values, t(dx(f)).values, atol=1e-11)


def test_non_hermitian_symbol_rejected(small_grid) -> None:
    """A symbol that would produce complex output is refused."""
    symbol = np.ones(small_grid.num_points, dtype=complex)
    symbol[1] = 1j
    with pytest.raises(InvalidParameter, match="not Hermitian"):
        Multiplier(small_grid, symbol, "bad")


def test_batched_application(small_grid, random_fields) -> None:
    """Applying to a stack equals applying row by row."""
    batch = np.array([f.values for f in random_fields[:5]])
    op = tilbert_dx(small_grid, 2.0)
    stacked = op.apply_array(batch)
    for row, f in zip(stacked, random_fields[:5]):
        np.testing.assert_allclose(row, op(f).values, atol=1e-13)


def test_field_checks(small_grid) -> None:
    """Fields are finite, read-only and tied to their grid."""
    with pytest.raises(InvalidParameter):
        Field(small_grid, np.full(small_grid.num_points, np.nan))
    with pytest.raises(InvalidParameter):
        Field(small_grid, np.zeros(3))
    f = Field.zeros(small_grid)
    assert not f.values.flags.writeable
    other = Field.zeros(make_grid(64, 20.0))
    with pytest.raises(InvalidParameter, match="different grids"):
        f + other
    assert np.all((2.0 * (f + 1.0)).values == 2.0)
    assert np.all((np.float64(3.0) * (f + 1.0)).values == 3.0)


def test_inner_product_and_norms(small_grid, random_fields) -> None:
    """Discrete pairing, Parseval and H^0 agree."""
    k = 2 * np.pi * 4 / small_grid.length
    f = Field.from_function(small_grid, lambda x: np.cos(k * x))
    assert abs(inner_product(f, f) - small_grid.length / 2) < 1e-12
    for g in random_fields:
        assert abs(l2_norm(g) - 1.0) < 1e-12
        assert abs(sobolev_norm(g, 0.0) - l2_norm(g)) < 1e-12
        assert sobolev_norm(g, 1.0) > sobolev_norm(g, 0.5) > l2_norm(g)


def test_sobolev_norm_of_mode(small_grid) -> None:
    """A single mode carries its weight exactly."""
    xi = 3 / small_grid.length
    f = Field.from_function(small_grid, lambda x: np.sin(2 * np.pi * xi * x))
    weight = (1 + (2 * np.pi * xi) ** 2) ** 0.5
    assert abs(sobolev_norm(f, 1.0) - np.sqrt(weight**2 * small_grid.length / 2)) < 1e-11


def test_band_limited_field_is_seeded(small_grid) -> None:
    """Same seed, same field; the mean vanishes and the norm is one."""
    first = band_limited_field(small_grid, np.random.default_rng(7), 10)
    second = band_limited_field(small_grid, np.random.default_rng(7), 10)
    np.testing.assert_array_equal(first.values, second.values)
    assert abs(np.sum(first.values)) < 1e-12
    spectrum = np.abs(np.fft.rfft(first.values))
    assert np.max(spectrum[11:]) < 1e-12
