"""Conserved functionals H0..H3, their variations and the Lyapunov combinations built from them."""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
import math

import numpy as np

from .const import LOGGER, SPEED_FD_STEP
from .exceptions import InvalidParameter, NumericalFailure
from .soliton import SolitonParams, da_dc, sample_soliton, solve_transcendental
from .spectral_core import Field, Grid, derivative, inner_product, l2_norm, tilbert_dx

FUNCTIONAL_INDICES = (0, 1, 2, 3)
GRADIENT_INDICES = (1, 2, 3)
MAX_LYAPUNOV_COUNT = 2


def _check_index(m: int, allowed: Sequence[int]) -> None:
    if m not in allowed:
        raise InvalidParameter("invalid_index", {"index": m, "allowed": list(allowed)})


def check_speeds(speeds: Sequence[float]) -> tuple[float, ...]:
    """Return speeds as floats, rejecting unordered, repeated or nonpositive input."""
    values = tuple(float(c) for c in speeds)
    if not values or values[0] <= 0 or any(right <= left for left, right in zip(values, values[1:])):
        raise InvalidParameter("speeds_not_increasing", {"speeds": list(values)})
    return values


def eval_H(m: int, u: Field, delta: float) -> float:
    """Evaluate H_m(u) with the trapezoid rule."""
    _check_index(m, FUNCTIONAL_INDICES)
    v = u.values
    h = u.grid.spacing
    if m == 0:
        return float(h * np.sum(v))
    if m == 1:
        return float(0.5 * h * np.dot(v, v))
    dv = tilbert_dx(u.grid, delta).apply_array(v)
    if m == 2:
        return float(-h * np.sum(v**3 / 3.0 + 0.5 * v * dv + v * v / (2.0 * delta)))
    vxx = derivative(u.grid, 2).apply_array(v)
    density = (
        0.25 * v**4
        + 0.75 * v * v * dv
        + 0.375 * dv * dv
        - 0.125 * v * vxx
        + v**3 / (3.0 * delta)
        + v * dv / (2.0 * delta)
        + v * v / (8.0 * delta**2)
    )
    return float(h * np.sum(density))


def gradient_values(m: int, v: np.ndarray, grid: Grid, delta: float) -> np.ndarray:
    """Return the variational derivative of H_m on raw samples (last axis)."""
    _check_index(m, GRADIENT_INDICES)
    if m == 1:
        return np.array(v, dtype=float)
    tdx = tilbert_dx(grid, delta)
    dv = tdx.apply_array(v)
    if m == 2:
        return -(v * v + dv + v / delta)
    vxx = derivative(grid, 2).apply_array(v)
    return (
        v**3
        + 1.5 * v * dv
        + 0.75 * tdx.apply_array(v * v)
        + 0.75 * tdx.apply_array(dv)
        - 0.25 * vxx
        + v * v / delta
        + dv / delta
        + v / (4.0 * delta**2)
    )


def grad_H(m: int, u: Field, delta: float) -> Field:
    """Return the variational derivative of H_m at u."""
    return Field(u.grid, gradient_values(m, u.values, u.grid, delta))


def second_variation_values(m: int, v: np.ndarray, z: np.ndarray, grid: Grid, delta: float) -> np.ndarray:
    """Apply H_m''(v) to z; z may be a batch along its leading axes."""
    _check_index(m, GRADIENT_INDICES)
    if m == 1:
        return np.array(z, dtype=float)
    tdx = tilbert_dx(grid, delta)
    dz = tdx.apply_array(z)
    if m == 2:
        return -(2.0 * v * z + dz + z / delta)
    dv = tdx.apply_array(v)
    zxx = derivative(grid, 2).apply_array(z)
    return (
        3.0 * v * v * z
        + 1.5 * (z * dv + v * dz)
        + 1.5 * tdx.apply_array(v * z)
        + 0.75 * tdx.apply_array(dz)
        - 0.25 * zxx
        + 2.0 * v * z / delta
        + dz / delta
        + z / (4.0 * delta**2)
    )


def hpp_apply(m: int, u: Field, z: Field, delta: float) -> Field:
    """Return H_m''(u) z."""
    return Field(u.grid, second_variation_values(m, u.values, z.values, u.grid, delta))


def poisson_bracket(i: int, j: int, u: Field, delta: float) -> float:
    """Return <grad H_i(u), d/dx grad H_j(u)>."""
    dx = derivative(u.grid, 1)
    return inner_product(grad_H(i, u, delta), dx(grad_H(j, u, delta)))


def el_residual(p: SolitonParams, g: Grid) -> float:
    """Return the L2 norm of T^delta Q_x + (1/delta - c) Q + Q^2."""
    q = sample_soliton(p, g)
    residual = tilbert_dx(g, p.delta)(q) + (1.0 / p.delta - p.c) * q + q * q
    return l2_norm(residual)


def soliton_level(m: int, p: SolitonParams) -> float:
    """Return e_m with H_m'(Q_c) = e_m Q_c."""
    _check_index(m, GRADIENT_INDICES)
    if m == 1:
        return 1.0
    if m == 2:
        return -p.c
    return (3.0 * p.c**2 - 2.0 * p.c / p.delta - p.a**2) / 4.0


def soliton_level_dc(m: int, p: SolitonParams) -> float:
    """Return de_m/dc."""
    _check_index(m, GRADIENT_INDICES)
    if m == 1:
        return 0.0
    if m == 2:
        return -1.0
    return (6.0 * p.c - 2.0 / p.delta - 2.0 * p.a * da_dc(p)) / 4.0


def trace_values(p: SolitonParams) -> tuple[float, float]:
    """Return the closed forms (H0, H1) of a soliton: (4 delta kappa, 2 delta kappa c)."""
    return 4.0 * p.delta * p.kappa, 2.0 * p.delta * p.kappa * p.c


def G_formula(p: SolitonParams) -> float:
    """Return G = 4 delta (c sin^2(2 kappa delta) / (4 kappa delta - sin(4 kappa delta)) + kappa)."""
    two_kd = 2.0 * p.kappa * p.delta
    return 4.0 * p.delta * (p.c * math.sin(two_kd) ** 2 / (2.0 * two_kd - math.sin(2.0 * two_kd)) + p.kappa)


def functional_speed_derivative(m: int, c: float, delta: float, g: Grid, x0: float = 0.0) -> float:
    """Return dH_m(Q_c)/dc by a central difference with re-solved shape."""
    _check_index(m, FUNCTIONAL_INDICES)
    step = SPEED_FD_STEP * c
    plus = eval_H(m, sample_soliton(solve_transcendental(c + step, delta, x0=x0), g), delta)
    minus = eval_H(m, sample_soliton(solve_transcendental(c - step, delta, x0=x0), g), delta)
    return (plus - minus) / (2.0 * step)


@dataclass(frozen=True)
class MultiplierSet:
    """Lagrange multipliers mu_1..mu_n of a Lyapunov functional."""

    mu: tuple[float, ...]
    speeds: tuple[float, ...] = ()
    source: str = "custom"

    @property
    def count(self) -> int:
        """Return n."""
        return len(self.mu)

    def reconstruction_defect(self) -> float:
        """Return the largest relative mismatch against the coefficients of prod(x + c_m)."""
        expected = np.poly(-np.asarray(self.speeds, dtype=float))[1:]
        scale = np.maximum(np.abs(expected), 1.0)
        return float(np.max(np.abs(np.asarray(self.mu) - expected) / scale))


def vieta(speeds: Sequence[float]) -> MultiplierSet:
    """Return the elementary symmetric functions of the speeds."""
    values = check_speeds(speeds)
    coefficients = [1.0]
    for c in values:
        coefficients = [1.0] + [coefficients[m] + c * coefficients[m - 1] for m in range(1, len(coefficients))] + [
            c * coefficients[-1]
        ]
    multipliers = MultiplierSet(tuple(coefficients[1:]), values, "vieta")
    defect = multipliers.reconstruction_defect()
    if defect > 1e-12:
        raise NumericalFailure("vieta_defect", {"defect": defect})
    return multipliers


def critical_multipliers(speeds: Sequence[float], delta: float) -> MultiplierSet:
    """Return the multipliers that make every constituent soliton critical for S_n."""
    values = check_speeds(speeds)
    count = len(values)
    if count > MAX_LYAPUNOV_COUNT:
        raise InvalidParameter("unsupported_count", {"what": "critical_multipliers", "limit": MAX_LYAPUNOV_COUNT, "count": count})
    solitons = [solve_transcendental(c, delta) for c in values]
    matrix = np.array([[soliton_level(count + 1 - m, p) for m in range(1, count + 1)] for p in solitons])
    rhs = -np.array([soliton_level(count + 1, p) for p in solitons])
    mu = np.linalg.solve(matrix, rhs)
    LOGGER.debug("Critical multipliers %s for speeds %s", mu, values)
    return MultiplierSet(tuple(float(x) for x in mu), values, "critical")


def _lyapunov_terms(multipliers: MultiplierSet) -> list[tuple[int, float]]:
    count = multipliers.count
    if not 1 <= count <= MAX_LYAPUNOV_COUNT:
        raise InvalidParameter("unsupported_count", {"what": "Lyapunov functional", "limit": MAX_LYAPUNOV_COUNT, "count": count})
    return [(count + 1, 1.0)] + [(count + 1 - m, mu) for m, mu in enumerate(multipliers.mu, start=1)]


def eval_lyapunov(u: Field, multipliers: MultiplierSet, delta: float) -> float:
    """Return S_n(u) = H_{n+1}(u) + sum_m mu_m H_{n+1-m}(u)."""
    return sum(weight * eval_H(m, u, delta) for m, weight in _lyapunov_terms(multipliers))


def grad_lyapunov(u: Field, multipliers: MultiplierSet, delta: float) -> Field:
    """Return the gradient of S_n at u."""
    values = sum(weight * gradient_values(m, u.values, u.grid, delta) for m, weight in _lyapunov_terms(multipliers))
    return Field(u.grid, values)


def lyapunov_second_variation_values(
    v: np.ndarray, z: np.ndarray, grid: Grid, multipliers: MultiplierSet, delta: float
) -> np.ndarray:
    """Apply S_n''(v) to z (batched)."""
    return sum(weight * second_variation_values(m, v, z, grid, delta) for m, weight in _lyapunov_terms(multipliers))


def eval_S2(u: Field, c1: float, c2: float, delta: float, multipliers: MultiplierSet | None = None) -> float:
    """Return S_2(u) = H_3 + mu_1 H_2 + mu_2 H_1, Vieta multipliers unless given."""
    speeds = check_speeds((c1, c2))
    return eval_lyapunov(u, multipliers or vieta(speeds), delta)


@dataclass(frozen=True)
class ConstraintTargets:
    """Target values H_1(U)..H_n(U) of a reference state."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not all(math.isfinite(value) for value in self.values):
            raise InvalidParameter("nonfinite_field", {"num_points": len(self.values)})

    @classmethod
    def from_state(cls, u: Field, count: int, delta: float) -> ConstraintTargets:
        """Record H_1..H_count at u."""
        return cls(tuple(eval_H(m, u, delta) for m in range(1, count + 1)))


def eval_augmented(
    u: Field,
    penalty: float,
    targets: ConstraintTargets,
    speeds: Sequence[float],
    delta: float,
    multipliers: MultiplierSet | None = None,
) -> float:
    """Return S_2(u) + (C/2) sum_j (H_j(u) - target_j)^2."""
    if not penalty > 0:
        raise InvalidParameter("invalid_penalty", {"penalty": penalty})
    c1, c2 = check_speeds(speeds)
    misfit = [eval_H(m, u, delta) - target for m, target in enumerate(targets.values, start=1)]
    return eval_S2(u, c1, c2, delta, multipliers) + 0.5 * penalty * sum(value * value for value in misfit)
