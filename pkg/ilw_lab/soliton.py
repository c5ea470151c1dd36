"""Exact ILW solitons, the speed-shape relation and well-separated superpositions."""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy import fft
from scipy.optimize import bisect

from .const import BOX_TAIL_LIMIT, LOGGER, PARAM_RESIDUAL_TOL, SPEED_FD_STEP, TRANSCENDENTAL_TOL
from .exceptions import BoxSizeWarning, InvalidParameter, NumericalFailure
from .spectral_core import Field, Grid

# Relative offsets keeping the bracket strictly inside (0, pi/delta).
_BRACKET_LOW = 1e-12
_BRACKET_HIGH = 1.0 - 1e-15


def shape_residual(a: float, c: float, delta: float) -> float:
    """Return g(a) = a*delta*cot(a*delta) - 1 + c*delta."""
    theta = a * delta
    return theta / math.tan(theta) - 1.0 + c * delta


@dataclass(frozen=True)
class SolitonParams:
    """Speed, depth and the profile parameter a bound to them by the shape relation."""

    c: float
    delta: float
    a: float
    kappa: float
    x0: float = 0.0

    def __post_init__(self) -> None:
        if not (self.c > 0 and self.delta > 0 and 0 < self.a < math.pi / self.delta):
            raise InvalidParameter("invalid_soliton", {"c": self.c, "delta": self.delta, "a": self.a})
        if abs(self.kappa - 0.5 * self.a) > 1e-15 * self.a:
            raise InvalidParameter("invalid_soliton", {"c": self.c, "delta": self.delta, "a": self.a})
        residual = abs(shape_residual(self.a, self.c, self.delta))
        if residual > PARAM_RESIDUAL_TOL * max(1.0, (self.c * self.delta) ** 2):
            raise InvalidParameter("invalid_soliton", {"c": self.c, "delta": self.delta, "a": self.a})

    @property
    def theta(self) -> float:
        """Return a*delta, which lies in (0, pi)."""
        return self.a * self.delta

    @property
    def peak(self) -> float:
        """Return the maximum a*tan(a*delta/2)."""
        return self.a * math.tan(0.5 * self.theta)

    def at(self, x0: float) -> SolitonParams:
        """Return the same soliton centered elsewhere."""
        return SolitonParams(self.c, self.delta, self.a, self.kappa, x0)


def solve_transcendental(c: float, delta: float, tol: float = TRANSCENDENTAL_TOL, x0: float = 0.0) -> SolitonParams:
    """Solve a*delta*cot(a*delta) = 1 - c*delta for a in (0, pi/delta) by bisection."""
    if not c > 0:
        raise InvalidParameter("invalid_speed", {"speed": c})
    if not delta > 0:
        raise InvalidParameter("invalid_delta", {"delta": delta})
    if not 0 < tol <= 1e-10:
        raise InvalidParameter("invalid_tolerance", {"tol": tol})

    low = _BRACKET_LOW * math.pi / delta
    high = _BRACKET_HIGH * math.pi / delta
    if not (shape_residual(low, c, delta) > 0 > shape_residual(high, c, delta)):
        LOGGER.error("Shape relation not bracketed for c=%s delta=%s", c, delta)
        raise NumericalFailure("bracket_failed", {"speed": c, "delta": delta})

    a = bisect(shape_residual, low, high, args=(c, delta), xtol=tol, maxiter=400)
    LOGGER.debug("Shape parameter a=%.17g for c=%s delta=%s", a, c, delta)
    return SolitonParams(float(c), float(delta), float(a), 0.5 * float(a), float(x0))


def da_dc(p: SolitonParams) -> float:
    """Return da/dc = 2 sin^2(a delta) / (2 a delta - sin(2 a delta))."""
    theta = p.theta
    return 2.0 * math.sin(theta) ** 2 / (2.0 * theta - math.sin(2.0 * theta))


def minimal_image(s: np.ndarray, length: float) -> np.ndarray:
    """Wrap offsets into [-L/2, L/2)."""
    return np.mod(s + 0.5 * length, length) - 0.5 * length


def sample_soliton(p: SolitonParams, g: Grid, t: float = 0.0) -> Field:
    """Sample Q_c(x - c t - x0) = a sin(a delta) / (cosh(a s) + cos(a delta))."""
    if math.exp(-0.5 * p.a * g.length) >= BOX_TAIL_LIMIT:
        warnings.warn(
            f"Box L={g.length} too short for a={p.a:.6g}: edge value exp(-aL/2)={math.exp(-0.5 * p.a * g.length):.3e}",
            BoxSizeWarning,
            stacklevel=2,
        )
    s = minimal_image(g.x - p.c * t - p.x0, g.length)
    decay = np.exp(-p.a * np.abs(s))
    theta = p.theta
    values = 2.0 * p.a * math.sin(theta) * decay / (1.0 + 2.0 * math.cos(theta) * decay + decay * decay)
    return Field(g, values)


def tail_bound(p: SolitonParams, s: np.ndarray) -> np.ndarray:
    """Return 2 a |sin(a delta)| exp(-a |s|)."""
    return 2.0 * p.a * abs(math.sin(p.theta)) * np.exp(-p.a * np.abs(s))


def spectral_tail(p: SolitonParams, g: Grid) -> float:
    """Return the largest Fourier amplitude at or above N/3 relative to the largest overall."""
    amplitudes = np.abs(fft.rfft(sample_soliton(p, g).values))
    return float(amplitudes[g.num_points // 3 :].max() / amplitudes.max())


def soliton_dc(p: SolitonParams, g: Grid) -> Field:
    """Return dQ/dc by a central difference that re-solves the shape relation."""
    step = SPEED_FD_STEP * p.c
    if p.c - step <= 0:
        raise InvalidParameter("invalid_speed", {"speed": p.c - step})
    plus = solve_transcendental(p.c + step, p.delta, x0=p.x0)
    minus = solve_transcendental(p.c - step, p.delta, x0=p.x0)
    return (sample_soliton(plus, g) - sample_soliton(minus, g)) / (2.0 * step)


@dataclass(frozen=True)
class MultiSolitonSpec:
    """Ordered (speed, position) pairs."""

    entries: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        entries = tuple((float(c), float(x0)) for c, x0 in self.entries)
        speeds = [c for c, _ in entries]
        if not entries or speeds[0] <= 0 or any(right <= left for left, right in zip(speeds, speeds[1:])):
            raise InvalidParameter("speeds_not_increasing", {"speeds": speeds})
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_lists(cls, speeds: Sequence[float], positions: Sequence[float]) -> MultiSolitonSpec:
        """Pair speeds with positions."""
        if len(speeds) != len(positions):
            raise InvalidParameter("speeds_not_increasing", {"speeds": list(speeds)})
        return cls(tuple(zip(speeds, positions)))

    @property
    def speeds(self) -> tuple[float, ...]:
        """Return the wave speeds."""
        return tuple(c for c, _ in self.entries)

    @property
    def positions(self) -> tuple[float, ...]:
        """Return the initial positions."""
        return tuple(x0 for _, x0 in self.entries)

    @property
    def count(self) -> int:
        """Return the number of solitons."""
        return len(self.entries)


@dataclass(frozen=True)
class Superposition:
    """A sampled sum of separated solitons and how well separated they are."""

    field: Field
    solitons: tuple[SolitonParams, ...]
    min_separation: float
    tail_units: float | None


def periodic_separation(centers: Sequence[float], length: float) -> float:
    """Return the smallest pairwise distance on the circle of circumference L."""
    best = math.inf
    for i, left in enumerate(centers):
        for right in centers[i + 1 :]:
            gap = math.fmod(abs(right - left), length)
            best = min(best, gap, length - gap)
    return best


def superpose(spec: MultiSolitonSpec, delta: float, g: Grid, t: float = 0.0) -> Superposition:
    """Sum the constituent solitons of spec at time t."""
    solitons = tuple(solve_transcendental(c, delta, x0=x0) for c, x0 in spec.entries)
    values = np.zeros(g.num_points)
    for p in solitons:
        values += sample_soliton(p, g, t).values
    centers = [p.x0 + p.c * t for p in solitons]
    min_separation = periodic_separation(centers, g.length)
    tail_units = None if spec.count < 2 else min_separation * min(p.a for p in solitons)
    LOGGER.debug("Superposed %s solitons, separation %.6g (%s tail units)", spec.count, min_separation, tail_units)
    return Superposition(Field(g, values), solitons, min_separation, tail_units)


def superpose_dc(spec: MultiSolitonSpec, delta: float, g: Grid, index: int) -> Field:
    """Return dU/dc_j; only the j-th constituent depends on c_j."""
    c, x0 = spec.entries[index]
    return soliton_dc(solve_transcendental(c, delta, x0=x0), g)
