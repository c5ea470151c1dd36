"""Fit soliton positions to a state by the orthogonality conditions against translation modes."""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .const import LOGGER, MODULATION_MAX_ITER, MODULATION_MIN_SEPARATION, MODULATION_TOL
from .soliton import MultiSolitonSpec, minimal_image, sample_soliton, superpose
from .spectral_core import Field, derivative, l2_norm, sobolev_norm

MAX_HALVINGS = 12
SINGULAR_CONDITION = 1e12


@dataclass(frozen=True)
class ModulationFit:
    """Fitted positions and the orthogonality residuals they leave."""

    positions: tuple[float, ...]
    residuals: tuple[float, ...]
    converged: bool
    iterations: int = 0
    diagnostic: str | None = None
    history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def residual(self) -> float:
        """Return the largest orthogonality residual."""
        return max((abs(r) for r in self.residuals), default=0.0)


class _Family:
    """Translation modes of a fixed-speed superposition."""

    def __init__(self, u: Field, speeds: Sequence[float], delta: float) -> None:
        self.u = u
        self.speeds = tuple(float(c) for c in speeds)
        self.delta = delta
        self._dx = derivative(u.grid, 1)
        self._dxx = derivative(u.grid, 2)

    def state(self, positions: Sequence[float]) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray], float]:
        superposition = superpose(MultiSolitonSpec.from_lists(self.speeds, positions), self.delta, self.u.grid)
        slopes, curvatures = [], []
        for p in superposition.solitons:
            q = sample_soliton(p, self.u.grid).values
            slopes.append(self._dx.apply_array(q))
            curvatures.append(self._dxx.apply_array(q))
        a_max = max(p.a for p in superposition.solitons)
        return superposition.field.values, slopes, curvatures, superposition.min_separation * a_max

    def conditions(self, positions: Sequence[float]) -> tuple[np.ndarray, np.ndarray, float]:
        """Return J_j = <u - U, dU/dx_j>, its Jacobian and the separation in units of 1/a_max."""
        values, slopes, curvatures, separation = self.state(positions)
        h = self.u.grid.spacing
        misfit = self.u.values - values
        # dU/dx_j = -Q_j'
        residuals = np.array([-h * np.dot(misfit, slope) for slope in slopes])
        gram = h * np.array([[np.dot(left, right) for right in slopes] for left in slopes])
        jacobian = -gram + np.diag([h * np.dot(misfit, curvature) for curvature in curvatures])
        return residuals, jacobian, separation


def modulate(
    u: Field,
    speeds: Sequence[float],
    delta: float,
    initial_positions: Sequence[float],
    tol: float = MODULATION_TOL,
    max_iter: int = MODULATION_MAX_ITER,
) -> ModulationFit:
    """Solve <u - U(x), dU/dx_j> = 0 for the positions by guarded Newton iteration."""
    family = _Family(u, speeds, delta)
    length = u.grid.length
    positions = np.array(initial_positions, dtype=float)
    scale = tol * l2_norm(u)
    history = []

    residuals, jacobian, separation = family.conditions(positions)
    for iteration in range(max_iter + 1):
        norm = float(np.max(np.abs(residuals)))
        history.append(norm)
        if len(positions) > 1 and separation < MODULATION_MIN_SEPARATION:
            LOGGER.warning("Modulation stopped: solitons overlap (separation %.3g / a_max)", separation)
            return _fit(positions, residuals, False, iteration, "overlap", history, length)
        if norm <= scale:
            return _fit(positions, residuals, True, iteration, None, history, length)
        if iteration == max_iter:
            break
        if np.linalg.cond(jacobian) > SINGULAR_CONDITION:
            LOGGER.warning("Modulation stopped: singular Jacobian at positions %s", positions)
            return _fit(positions, residuals, False, iteration, "singular_jacobian", history, length)

        step = np.linalg.solve(jacobian, -residuals)
        for _ in range(MAX_HALVINGS):
            trial = positions + step
            trial_residuals, trial_jacobian, trial_separation = family.conditions(trial)
            if float(np.max(np.abs(trial_residuals))) < norm:
                break
            step = 0.5 * step
        else:
            LOGGER.debug("Step halving exhausted at iteration %s, residual %.3e", iteration, norm)
            return _fit(positions, residuals, False, iteration, "no_descent", history, length)
        positions, residuals, jacobian, separation = trial, trial_residuals, trial_jacobian, trial_separation

    LOGGER.debug("Modulation did not converge in %s iterations, residual %.3e", max_iter, history[-1])
    return _fit(positions, residuals, False, max_iter, "max_iterations", history, length)


def _fit(positions, residuals, converged, iterations, diagnostic, history, length) -> ModulationFit:
    wrapped = minimal_image(np.asarray(positions, dtype=float), length)
    return ModulationFit(
        positions=tuple(float(x) for x in wrapped),
        residuals=tuple(float(r) for r in residuals),
        converged=converged,
        iterations=iterations,
        diagnostic=diagnostic,
        history=tuple(history),
    )


def modulated_state(fit: ModulationFit, speeds: Sequence[float], delta: float, u: Field) -> Field:
    """Return the superposition at the fitted positions."""
    return superpose(MultiSolitonSpec.from_lists(speeds, fit.positions), delta, u.grid).field


def modulated_distance(u: Field, fit: ModulationFit, speeds: Sequence[float], delta: float, s: float = 1.0) -> float:
    """Return the H^s distance from u to the fitted superposition."""
    return sobolev_norm(u - modulated_state(fit, speeds, delta, u), s)
