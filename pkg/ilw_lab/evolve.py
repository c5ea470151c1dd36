"""Integrating-factor RK4 evolution of the ILW equation with conservation traces and peak tracking."""
from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass
import math
from typing import NamedTuple
import warnings

import numpy as np
from scipy import fft
from scipy.stats import linregress

from .const import (
    CFL_LIMIT,
    DEFAULT_DT,
    DEFAULT_HORIZON,
    DEFAULT_PEAK_HEIGHT,
    DEFAULT_RECORD_STRIDE,
    LOGGER,
    TAIL_WATCH_LIMIT,
    TAIL_WATCH_WIDTH,
)
from .exceptions import CflWarning, InvalidParameter, NumericalFailure, TailWarning
from .functionals import eval_H
from .soliton import minimal_image
from .spectral_core import (
    Field,
    Grid,
    Multiplier,
    centered_dispersion,
    derivative,
    dispersion_w,
    l2_norm,
    multiplier_from_symbol,
    sobolev_norm,
    tilbert_dx,
    tilbert_dxx,
)

Peak = tuple[float, float]


@dataclass(frozen=True)
class EvolveConfig:
    """Time-stepping settings for one trajectory."""

    dt: float = DEFAULT_DT
    horizon: float = DEFAULT_HORIZON
    dealias: bool = True
    record_stride: int = DEFAULT_RECORD_STRIDE
    tail_watch: bool = False
    nonlinear: bool = True
    peak_height: float = DEFAULT_PEAK_HEIGHT

    def __post_init__(self) -> None:
        reason = None
        if not (self.dt > 0 and self.horizon > 0):
            reason = "dt and horizon must be positive"
        elif self.dt > self.horizon:
            reason = "dt must not exceed the horizon"
        elif abs(round(self.horizon / self.dt) * self.dt - self.horizon) > 1e-9 * self.horizon:
            reason = "horizon must be a whole number of steps"
        elif int(self.record_stride) != self.record_stride or self.record_stride < 1:
            reason = "record_stride must be a positive integer"
        elif not self.peak_height > 0:
            reason = "peak_height must be positive"
        if reason:
            raise InvalidParameter("invalid_evolve_config", {"reason": reason})

    @property
    def num_steps(self) -> int:
        """Return the number of steps covering the horizon."""
        return int(round(self.horizon / self.dt))


@dataclass(frozen=True)
class TraceRecord:
    """Conserved quantities, peaks and H^(1/2) norm at one recorded time."""

    t: float
    H: tuple[float, float, float, float]
    peaks: tuple[Peak, ...]
    sobolev_half: float


def linear_symbol(grid: Grid, delta: float) -> Multiplier:
    """Return m(xi) = 2 pi i xi (w(xi) - 1/delta), the linear part of the flow."""
    return multiplier_from_symbol(grid, lambda xi: 2j * np.pi * xi * centered_dispersion(xi, delta), "ilw_linear")


def dealias_mask(grid: Grid) -> np.ndarray:
    """Return the 2/3-rule mask on the half spectrum."""
    return (np.arange(grid.num_points // 2 + 1) < grid.num_points / 3.0).astype(float)


def _product(values: np.ndarray, grid: Grid, dealias: bool) -> np.ndarray:
    if not dealias:
        return values
    return fft.irfft(dealias_mask(grid) * fft.rfft(values), n=grid.num_points)


def rhs(u: Field, delta: float, dealias: bool = True) -> Field:
    """Return u_t = d/dx grad H_2(u) = -d/dx (u^2 + T^delta u_x + u/delta)."""
    v = u.values
    flux = _product(v * v, u.grid, dealias) + tilbert_dx(u.grid, delta).apply_array(v) + v / delta
    return Field(u.grid, -derivative(u.grid, 1).apply_array(flux))


def rhs_direct(u: Field, delta: float, dealias: bool = True) -> Field:
    """Return -(1/delta) u_x - 2 u u_x - T^delta u_xx term by term."""
    v = u.values
    vx = derivative(u.grid, 1).apply_array(v)
    values = -vx / delta - _product(2.0 * v * vx, u.grid, dealias) - tilbert_dxx(u.grid, delta).apply_array(v)
    return Field(u.grid, values)


class IfRk4Stepper:
    """Classical RK4 on the integrating-factor variable; the linear flow is exact."""

    def __init__(self, grid: Grid, delta: float, dt: float, dealias: bool = True, nonlinear: bool = True) -> None:
        """Precompute the half and full step propagators."""
        self.grid = grid
        self.dt = dt
        self.nonlinear = nonlinear
        self._half = np.exp(0.5 * dt * linear_symbol(grid, delta).half_symbol)
        self._full = self._half * self._half
        self._ik = derivative(grid, 1).half_symbol
        self._mask = dealias_mask(grid) if dealias else None

    def nonlinear_term(self, uhat: np.ndarray) -> np.ndarray:
        """Return the transform of -(u^2)_x."""
        if not self.nonlinear:
            return np.zeros_like(uhat)
        u = fft.irfft(uhat, n=self.grid.num_points)
        square = fft.rfft(u * u)
        if self._mask is not None:
            square *= self._mask
        return -self._ik * square

    def advance(self, uhat: np.ndarray) -> np.ndarray:
        """Advance the half spectrum by one step."""
        dt, half, full = self.dt, self._half, self._full
        k1 = self.nonlinear_term(uhat)
        k2 = self.nonlinear_term(half * (uhat + 0.5 * dt * k1))
        k3 = self.nonlinear_term(half * uhat + 0.5 * dt * k2)
        k4 = self.nonlinear_term(full * uhat + dt * half * k3)
        return full * uhat + dt / 6.0 * (full * k1 + 2.0 * half * (k2 + k3) + k4)


def step_ifrk4(u: Field, dt: float, delta: float, dealias: bool = True, nonlinear: bool = True) -> Field:
    """Take one integrating-factor RK4 step."""
    stepper = IfRk4Stepper(u.grid, delta, dt, dealias, nonlinear)
    uhat = stepper.advance(fft.rfft(u.values))
    if not np.all(np.isfinite(uhat)):
        LOGGER.error("Non-finite state after a single step of size %s", dt)
        raise NumericalFailure("blow_up", {"time": dt, "steps": 1})
    return Field(u.grid, fft.irfft(uhat, n=u.grid.num_points))


def cfl_number(u: Field, dt: float) -> float:
    """Return dt * max|u| * max|2 pi xi|."""
    return dt * float(np.max(np.abs(u.values))) * 2.0 * np.pi * float(np.max(np.abs(u.grid.xi)))


def trace_record(t: float, u: Field, delta: float, peak_height: float = DEFAULT_PEAK_HEIGHT) -> TraceRecord:
    """Evaluate the monitored quantities of a snapshot."""
    return TraceRecord(
        t=t,
        H=tuple(eval_H(m, u, delta) for m in range(4)),
        peaks=tuple(track_peaks(u, peak_height)),
        sobolev_half=sobolev_norm(u, 0.5),
    )


def _edge_amplitude(u: Field) -> float:
    edge = np.abs(u.grid.x) >= (0.5 - TAIL_WATCH_WIDTH) * u.grid.length
    return float(np.max(np.abs(u.values[edge])))


def run(
    u0: Field, cfg: EvolveConfig, delta: float, observer: Callable[[float, Field], None] | None = None
) -> tuple[Field, list[TraceRecord]]:
    """Evolve u0 over the configured horizon and record traces every record_stride steps.

    observer, when given, receives every recorded snapshot including the initial one.
    """
    grid = u0.grid
    cfl = cfl_number(u0, cfg.dt)
    if cfl > CFL_LIMIT:
        warnings.warn(f"Nonlinear CFL estimate {cfl:.3g} exceeds {CFL_LIMIT}", CflWarning, stacklevel=2)

    stepper = IfRk4Stepper(grid, delta, cfg.dt, cfg.dealias, cfg.nonlinear)
    uhat = fft.rfft(u0.values)
    records = [trace_record(0.0, u0, delta, cfg.peak_height)]
    if observer is not None:
        observer(0.0, u0)
    tail_warned = False
    u = u0
    LOGGER.debug("Evolving %s steps of dt=%s on N=%s, L=%s", cfg.num_steps, cfg.dt, grid.num_points, grid.length)

    for step in range(1, cfg.num_steps + 1):
        uhat = stepper.advance(uhat)
        if not np.all(np.isfinite(uhat)):
            LOGGER.error("Blow-up at step %s (t=%s)", step, step * cfg.dt)
            raise NumericalFailure("blow_up", {"time": step * cfg.dt, "steps": step})
        if step % cfg.record_stride and step != cfg.num_steps:
            continue
        u = Field(grid, fft.irfft(uhat, n=grid.num_points))
        records.append(trace_record(step * cfg.dt, u, delta, cfg.peak_height))
        if observer is not None:
            observer(step * cfg.dt, u)
        if cfg.tail_watch and not tail_warned and _edge_amplitude(u) > TAIL_WATCH_LIMIT:
            tail_warned = True
            warnings.warn(f"Solution reached the box edge at t={step * cfg.dt:.6g}", TailWarning, stacklevel=2)

    return u, records


def track_peaks(u: Field, min_height: float) -> list[Peak]:
    """Return local maxima above min_height refined by three-point parabolas."""
    if not min_height > 0:
        raise InvalidParameter("invalid_evolve_config", {"reason": "min_height must be positive"})
    v = u.values
    left = np.roll(v, 1)
    right = np.roll(v, -1)
    candidates = np.flatnonzero((v > left) & (v >= right) & (v > min_height))
    grid = u.grid
    peaks = []
    for index in candidates:
        f_minus, f_zero, f_plus = left[index], v[index], right[index]
        curvature = f_minus - 2.0 * f_zero + f_plus
        offset = 0.5 * (f_minus - f_plus) / curvature if curvature < 0 else 0.0
        position = float(minimal_image(np.asarray(grid.x[index] + offset * grid.spacing), grid.length))
        peaks.append((position, float(f_zero - 0.25 * (f_minus - f_plus) * offset)))
    return peaks


def fit_speed(series: Sequence[tuple[float, float]], period: float | None = None) -> tuple[float, float]:
    """Return the least-squares speed and r^2 of a (t, position) series, unwrapping periodic jumps."""
    if len(series) < 3:
        raise InvalidParameter("invalid_evolve_config", {"reason": "speed fit needs at least three points"})
    times = np.array([t for t, _ in series], dtype=float)
    positions = np.array([x for _, x in series], dtype=float)
    if period is not None:
        positions = np.unwrap(positions, period=period)
    fit = linregress(times, positions)
    return float(fit.slope), float(fit.rvalue**2)


class LimitError(NamedTuple):
    """Relative distance of the ILW dispersion from its shallow and deep water surrogates."""

    xi: float
    kdv_err: float
    bo_err: float


def _relative(value: float, reference: float) -> float:
    if reference == 0:
        return 0.0 if value == 0 else math.inf
    return abs(value - reference) / abs(reference)


def limit_symbol_errors(delta: float, xi_list: Sequence[float]) -> list[LimitError]:
    """Compare w - 1/delta with delta (2 pi xi)^2 / 3 and w with 2 pi |xi|."""
    table = []
    for xi in xi_list:
        kdv = delta * (2.0 * math.pi * xi) ** 2 / 3.0
        bo = 2.0 * math.pi * abs(xi)
        table.append(
            LimitError(
                float(xi),
                _relative(centered_dispersion(xi, delta), kdv),
                _relative(dispersion_w(xi, delta), bo),
            )
        )
    return table


def observed_order(
    u0: Field, delta: float, horizon: float, dt_values: Sequence[float], refinement: int = 8, dealias: bool = True
) -> tuple[list[float], float]:
    """Return self-convergence errors against a refined run and the fitted order in dt."""
    dt_values = sorted(dt_values, reverse=True)
    reference_cfg = EvolveConfig(dt=dt_values[-1] / refinement, horizon=horizon, dealias=dealias, record_stride=10**9)
    reference, _ = run(u0, reference_cfg, delta)
    errors = []
    for dt in dt_values:
        final, _ = run(u0, EvolveConfig(dt=dt, horizon=horizon, dealias=dealias, record_stride=10**9), delta)
        errors.append(l2_norm(final - reference))
    slope = np.polyfit(np.log(dt_values), np.log(errors), 1)[0]
    LOGGER.debug("Self-convergence errors %s give order %.4f", errors, slope)
    return errors, float(slope)
