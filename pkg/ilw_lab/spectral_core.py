"""Periodic grids, the ILW Fourier multipliers, inner products and Sobolev norms."""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import fft

from .const import LOGGER, MIN_GRID_POINTS
from .exceptions import InvalidParameter

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]
Scalar = Union[float, int, np.floating]

# Taylor coefficients of z*coth(z) in powers of z**2.
_ZCOTH_SERIES = (1.0, 1.0 / 3.0, -1.0 / 45.0, 2.0 / 945.0, -1.0 / 4725.0, 2.0 / 93555.0)
_ZCOTH_SERIES_LIMIT = 0.1


def _readonly(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class Grid:
    """Uniform periodic sampling of [-L/2, L/2) with its frequency ladder."""

    num_points: int
    length: float

    @property
    def spacing(self) -> float:
        """Return the sample spacing h = L/N."""
        return self.length / self.num_points

    @cached_property
    def x(self) -> FloatArray:
        """Return the sample points x_j = -L/2 + j*h."""
        return _readonly(-0.5 * self.length + self.spacing * np.arange(self.num_points))

    @cached_property
    def wavenumbers(self) -> NDArray[np.int64]:
        """Return integer wavenumbers in transform order; index N/2 is the Nyquist mode -N/2."""
        return _readonly(np.fft.fftfreq(self.num_points, d=1.0 / self.num_points).round().astype(np.int64))

    @cached_property
    def xi(self) -> FloatArray:
        """Return the continuous frequencies k/L in transform order."""
        return _readonly(self.wavenumbers / self.length)

    @property
    def nyquist_index(self) -> int:
        """Return the transform index of the Nyquist mode."""
        return self.num_points // 2


def make_grid(num_points: int, length: float) -> Grid:
    """Validate and build a periodic grid."""
    placeholders = {"num_points": num_points, "length": length}
    if int(num_points) != num_points or num_points % 2:
        raise InvalidParameter("invalid_grid", {**placeholders, "reason": "N must be even"})
    if num_points < MIN_GRID_POINTS:
        raise InvalidParameter("invalid_grid", {**placeholders, "reason": f"N must be at least {MIN_GRID_POINTS}"})
    if not np.isfinite(length) or length <= 0:
        raise InvalidParameter("invalid_grid", {**placeholders, "reason": "L must be positive"})
    return Grid(int(num_points), float(length))


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a function on a grid."""

    grid: Grid
    values: FloatArray

    # Keep numpy scalars from broadcasting over a Field.
    __array_ufunc__ = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.num_points,) or not np.all(np.isfinite(values)):
            raise InvalidParameter("nonfinite_field", {"num_points": self.grid.num_points})
        object.__setattr__(self, "values", _readonly(values))

    @classmethod
    def zeros(cls, grid: Grid) -> Field:
        """Return the zero field."""
        return cls(grid, np.zeros(grid.num_points))

    @classmethod
    def from_function(cls, grid: Grid, function: Callable[[FloatArray], ArrayLike]) -> Field:
        """Sample a vectorized function on the grid."""
        return cls(grid, np.broadcast_to(function(grid.x), (grid.num_points,)))

    def with_values(self, values: ArrayLike) -> Field:
        """Return a field on the same grid."""
        return Field(self.grid, values)

    def _other_values(self, other: Field | Scalar) -> FloatArray | Scalar:
        if isinstance(other, Field):
            check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other: Field | Scalar) -> Field:
        return self.with_values(self.values + self._other_values(other))

    __radd__ = __add__

    def __sub__(self, other: Field | Scalar) -> Field:
        return self.with_values(self.values - self._other_values(other))

    def __rsub__(self, other: Scalar) -> Field:
        return self.with_values(other - self.values)

    def __mul__(self, other: Field | Scalar) -> Field:
        return self.with_values(self.values * self._other_values(other))

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> Field:
        return self.with_values(self.values / other)

    def __neg__(self) -> Field:
        return self.with_values(-self.values)


def check_same_grid(*fields: Field) -> Grid:
    """Return the shared grid or raise on a mismatch."""
    grid = fields[0].grid
    for other in fields[1:]:
        if other.grid != grid:
            raise InvalidParameter("grid_mismatch")
    return grid


def _check_delta(delta: float) -> None:
    if not delta > 0:
        raise InvalidParameter("invalid_delta", {"delta": delta})


def _zcoth(z: FloatArray, centered: bool) -> FloatArray:
    """Return z*coth(z) (minus one when centered) for z >= 0."""
    out = np.empty_like(z)
    small = z < _ZCOTH_SERIES_LIMIT
    z2 = z[small] ** 2
    series = np.zeros_like(z2)
    for coefficient in reversed(_ZCOTH_SERIES[1:]):
        series = (series + coefficient) * z2
    out[small] = series if centered else 1.0 + series
    large = z[~small]
    out[~small] = large * _coth_positive(large) - (1.0 if centered else 0.0)
    return out


def _coth_positive(z: FloatArray) -> FloatArray:
    """coth for z > 0 without overflow."""
    out = np.empty_like(z)
    far = z > 2.0 * np.pi
    decay = np.exp(-2.0 * z[far])
    out[far] = 1.0 + 2.0 * decay / (1.0 - decay)
    out[~far] = 1.0 / np.tanh(z[~far])
    return out


def _as_output(result: FloatArray, scalar: bool) -> FloatArray | float:
    return float(result[0]) if scalar else result


def dispersion_w(xi: ArrayLike, delta: float) -> FloatArray | float:
    """Return w(xi; delta) = 2*pi*xi*coth(2*pi*delta*xi), with w(0) = 1/delta."""
    _check_delta(delta)
    scalar = np.ndim(xi) == 0
    z = 2.0 * np.pi * delta * np.abs(np.atleast_1d(np.asarray(xi, dtype=float)))
    return _as_output(_zcoth(z, centered=False) / delta, scalar)


def centered_dispersion(xi: ArrayLike, delta: float) -> FloatArray | float:
    """Return w(xi; delta) - 1/delta without cancellation near xi = 0."""
    _check_delta(delta)
    scalar = np.ndim(xi) == 0
    z = 2.0 * np.pi * delta * np.abs(np.atleast_1d(np.asarray(xi, dtype=float)))
    return _as_output(_zcoth(z, centered=True) / delta, scalar)


@dataclass(frozen=True, eq=False)
class Multiplier:
    """Diagonal operator in frequency space, one symbol value per wavenumber."""

    grid: Grid
    symbol: ComplexArray
    label: str = ""

    def __post_init__(self) -> None:
        symbol = np.array(self.symbol, dtype=complex)
        num_points = self.grid.num_points
        if symbol.shape != (num_points,):
            raise InvalidParameter("nonfinite_field", {"num_points": num_points})
        half = num_points // 2
        if not np.allclose(symbol[1:half], np.conj(symbol[: half : -1]), rtol=1e-14, atol=0.0):
            raise InvalidParameter("non_hermitian_symbol", {"label": self.label})
        symbol[half] = symbol[half].real
        object.__setattr__(self, "symbol", _readonly(symbol))

    @cached_property
    def half_symbol(self) -> ComplexArray:
        """Return the symbol on the non-negative half spectrum, Nyquist last."""
        return _readonly(self.symbol[: self.grid.num_points // 2 + 1].copy())

    def apply_array(self, values: np.ndarray) -> FloatArray:
        """Apply along the last axis of a real array (single field or batch)."""
        spectrum = fft.rfft(values, axis=-1)
        return fft.irfft(self.half_symbol * spectrum, n=self.grid.num_points, axis=-1)

    def __call__(self, f: Field) -> Field:
        return apply_multiplier(f, self)

    def __matmul__(self, other: Multiplier) -> Multiplier:
        """Compose two multipliers on the same grid."""
        if other.grid != self.grid:
            raise InvalidParameter("grid_mismatch")
        return Multiplier(self.grid, self.symbol * other.symbol, f"{self.label}*{other.label}")


def multiplier_from_symbol(grid: Grid, symbol_fn: Callable[[FloatArray], ArrayLike], label: str) -> Multiplier:
    """Sample a symbol function on the frequency ladder; the Nyquist value is the real even part."""
    symbol = np.array(np.broadcast_to(symbol_fn(grid.xi), (grid.num_points,)), dtype=complex)
    xi_nyquist = abs(grid.xi[grid.nyquist_index])
    pair = np.asarray(symbol_fn(np.array([xi_nyquist, -xi_nyquist])), dtype=complex)
    symbol[grid.nyquist_index] = 0.5 * (pair[0] + pair[-1]).real
    return Multiplier(grid, symbol, label)


def apply_multiplier(f: Field, m: Multiplier) -> Field:
    """Multiply the Fourier coefficients of f by the symbol of m."""
    if f.grid != m.grid:
        raise InvalidParameter("grid_mismatch")
    return Field(f.grid, m.apply_array(f.values))


@lru_cache(maxsize=64)
def derivative(grid: Grid, order: int = 1) -> Multiplier:
    """Return the order-p derivative, symbol (2*pi*i*xi)**p."""
    return multiplier_from_symbol(grid, lambda xi: (2j * np.pi * xi) ** order, f"d{order}")


@lru_cache(maxsize=64)
def tilbert_dx(grid: Grid, delta: float) -> Multiplier:
    """Return the combined multiplier of T^delta d/dx, symbol -w."""
    return multiplier_from_symbol(grid, lambda xi: -dispersion_w(xi, delta), "Tdx")


@lru_cache(maxsize=64)
def tilbert(grid: Grid, delta: float) -> Multiplier:
    """Return T^delta alone, symbol i*coth(2*pi*delta*xi) and 0 on the mean."""
    _check_delta(delta)

    def symbol(xi: FloatArray) -> ComplexArray:
        xi = np.atleast_1d(xi)
        out = np.zeros(xi.shape, dtype=complex)
        nonzero = xi != 0
        z = 2.0 * np.pi * delta * np.abs(xi[nonzero])
        out[nonzero] = 1j * np.sign(xi[nonzero]) * _coth_positive(z)
        return out

    return multiplier_from_symbol(grid, symbol, "T")


@lru_cache(maxsize=64)
def tilbert_dxx(grid: Grid, delta: float) -> Multiplier:
    """Return T^delta d2/dx2, symbol -w*(2*pi*i*xi)."""
    return multiplier_from_symbol(grid, lambda xi: -dispersion_w(xi, delta) * (2j * np.pi * xi), "Tdxx")


def inner_product(f: Field, g: Field) -> float:
    """Return the discrete L2 pairing h * sum(f*g)."""
    grid = check_same_grid(f, g)
    return float(grid.spacing * np.dot(f.values, g.values))


def l2_norm(f: Field) -> float:
    """Return the discrete L2 norm."""
    return float(np.sqrt(inner_product(f, f)))


def fourier_coefficients(f: Field) -> ComplexArray:
    """Return c_k = (1/N) sum_j f_j exp(-2*pi*i*k*x_j/L) in transform order."""
    grid = f.grid
    phase = np.where(grid.wavenumbers % 2 == 0, 1.0, -1.0)
    return fft.fft(f.values) / grid.num_points * phase


def sobolev_norm(f: Field, s: float) -> float:
    """Return the H^s norm from the Fourier coefficients."""
    grid = f.grid
    weight = (1.0 + (2.0 * np.pi * grid.xi) ** 2) ** s
    coefficients = fourier_coefficients(f)
    return float(np.sqrt(grid.length * np.sum(weight * np.abs(coefficients) ** 2)))


def band_limited_field(grid: Grid, rng: np.random.Generator, bandwidth: int) -> Field:
    """Return a seeded mean-free random field with modes 1..bandwidth and unit L2 norm."""
    bandwidth = min(int(bandwidth), grid.num_points // 2 - 1)
    spectrum = np.zeros(grid.num_points // 2 + 1, dtype=complex)
    modes = np.arange(1, bandwidth + 1)
    spectrum[modes] = (rng.standard_normal(bandwidth) + 1j * rng.standard_normal(bandwidth)) / modes
    field = Field(grid, fft.irfft(spectrum, n=grid.num_points))
    norm = l2_norm(field)
    LOGGER.debug("Band-limited field with %s modes, raw norm %s", bandwidth, norm)
    return field / norm
