"""Test position modulation of a double soliton."""
from __future__ import annotations

import numpy as np
import pytest

from ilw_lab.modulation import modulate, modulated_distance, modulated_state
from ilw_lab.soliton import MultiSolitonSpec, superpose

SPEEDS = (1.0, 2.0)


@pytest.fixture
def pair(fine_grid):
    """Return the separated c = (1, 2) superposition at x = (-20, 20)."""
    return superpose(MultiSolitonSpec.from_lists(SPEEDS, (-20.0, 20.0)), 1.0, fine_grid).field


def test_exact_state_needs_no_iteration(pair) -> None:
    """A state on the manifold is its own fit."""
    fit = modulate(pair, SPEEDS, 1.0, (-20.0, 20.0))
    assert fit.converged
    assert fit.iterations == 0
    assert fit.residual == 0.0
    assert modulated_distance(pair, fit, SPEEDS, 1.0) == pytest.approx(0.0, abs=1e-14)


def test_recovers_shifted_positions(pair) -> None:
    """Newton iteration walks back from a displaced guess."""
    fit = modulate(pair, SPEEDS, 1.0, (-19.9, 20.05))
    assert fit.converged
    assert fit.diagnostic is None
    np.testing.assert_allclose(fit.positions, (-20.0, 20.0), atol=1e-7)
    assert fit.history[0] > fit.history[-1]


def test_positions_are_wrapped(fine_grid) -> None:
    """Fitted positions come back inside the box."""
    u = superpose(MultiSolitonSpec.from_lists(SPEEDS, (-30.0, 45.0)), 1.0, fine_grid).field
    fit = modulate(u, SPEEDS, 1.0, (70.0, 45.0))
    assert fit.converged
    np.testing.assert_allclose(fit.positions, (-30.0, 45.0), atol=1e-7)


def test_overlap_is_diagnosed(pair) -> None:
    """Overlapping solitons stop the fit with a diagnostic instead of a wrong answer."""
    fit = modulate(pair, SPEEDS, 1.0, (0.0, 0.5))
    assert not fit.converged
    assert fit.diagnostic == "overlap"


def test_modulated_state_and_distance(pair, fine_grid) -> None:
    """The fitted superposition reproduces the state and the distance grows with a bump."""
    fit = modulate(pair, SPEEDS, 1.0, (-20.0, 20.0))
    np.testing.assert_allclose(modulated_state(fit, SPEEDS, 1.0, pair).values, pair.values, atol=1e-15)
    bumped = pair + 1e-3 * np.exp(-0.5 * fine_grid.x**2)
    fit = modulate(bumped, SPEEDS, 1.0, (-20.0, 20.0))
    assert fit.converged
    assert 0.0 < modulated_distance(bumped, fit, SPEEDS, 1.0) < 1e-2
