"""Test the exact soliton and superpositions."""
from __future__ import annotations

import json
import math
import warnings

import numpy as np
import pytest
from scipy.optimize import brentq

from ilw_lab.exceptions import BoxSizeWarning, InvalidParameter
from ilw_lab.soliton import (
    MultiSolitonSpec,
    SolitonParams,
    da_dc,
    periodic_separation,
    sample_soliton,
    shape_residual,
    soliton_dc,
    solve_transcendental,
    spectral_tail,
    superpose,
    superpose_dc,
    tail_bound,
)
from ilw_lab.spectral_core import inner_product, make_grid


@pytest.mark.parametrize("delta", [0.5, 1.0, 2.0, 10.0])
def test_quarter_period_speed(delta) -> None:
    """At c = 1/delta the shape parameter is pi/(2 delta)."""
    p = solve_transcendental(1.0 / delta, delta)
    assert abs(p.a - math.pi / (2 * delta)) < 1e-12
    assert p.kappa == 0.5 * p.a


def test_fast_soliton_matches_independent_root() -> None:
    """c = 2, delta = 1 lands past pi/2 where the cotangent changes sign."""
    p = solve_transcendental(2.0, 1.0)
    reference = brentq(shape_residual, 1e-6, math.pi - 1e-9, args=(2.0, 1.0), xtol=1e-15)
    assert abs(p.a - reference) < 1e-11
    assert abs(p.a - 2.0287578) < 1e-6
    assert p.theta > math.pi / 2


@pytest.mark.parametrize("c", [0.3, 1.0, 2.5])
def test_da_dc_against_difference(c) -> None:
    """The closed-form slope of a(c) matches a central difference."""
    p = solve_transcendental(c, 1.0)
    step = 1e-4
    difference = (solve_transcendental(c + step, 1.0).a - solve_transcendental(c - step, 1.0).a) / (2 * step)
    assert da_dc(p) == pytest.approx(difference, rel=1e-6)


def test_solve_rejects_bad_input() -> None:
    """Speed, depth and tolerance are validated."""
    with pytest.raises(InvalidParameter, match="speed"):
        solve_transcendental(0.0, 1.0)
    with pytest.raises(InvalidParameter, match="Depth"):
        solve_transcendental(1.0, -1.0)
    with pytest.raises(InvalidParameter, match="Tolerance"):
        solve_transcendental(1.0, 1.0, tol=1e-8)


def test_params_must_satisfy_shape_relation() -> None:
    """Hand-built parameters off the shape relation are refused."""
    with pytest.raises(InvalidParameter, match="shape relation"):
        SolitonParams(1.0, 1.0, 1.0, 0.5)
    with pytest.raises(InvalidParameter):
        SolitonParams(1.0, 1.0, 4.0, 2.0)


def test_profile_peak_and_symmetry(grid, soliton) -> None:
    """The maximum a tan(a delta / 2) sits at x0 and the profile is even."""
    q = sample_soliton(soliton, grid)
    center = grid.nyquist_index
    assert q.values[center] == pytest.approx(soliton.peak, rel=1e-14)
    assert np.argmax(q.values) == center
    np.testing.assert_allclose(q.values[center + 1 : center + 200], q.values[center - 1 : center - 200 : -1], atol=1e-13)


def test_profile_translates(grid, soliton) -> None:
    """Sampling at time t equals sampling the shifted soliton."""
    moved = sample_soliton(soliton, grid, t=2.5)
    shifted = sample_soliton(soliton.at(2.5 * soliton.c), grid)
    np.testing.assert_allclose(moved.values, shifted.values, atol=1e-14)


def test_short_box_warns() -> None:
    """Tails that do not fit in the box raise BoxSizeWarning."""
    with pytest.warns(BoxSizeWarning, match="too short"):
        sample_soliton(solve_transcendental(1.0, 1.0), make_grid(64, 10.0))


def test_long_box_is_quiet(grid, soliton) -> None:
    """A box of 100 holds the c = 1 soliton without warnings."""
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sample_soliton(soliton, grid)


def test_tail_bound(grid) -> None:
    """The bound dominates slow solitons and is sharp far out for fast ones."""
    slow = solve_transcendental(0.5, 1.0)
    assert np.all(sample_soliton(slow, grid).values <= tail_bound(slow, grid.x) * (1 + 1e-12))

    fast = solve_transcendental(2.0, 1.0)
    far = (grid.x >= 10.0) & (grid.x <= 12.0)
    ratio = sample_soliton(fast, grid).values[far] / tail_bound(fast, grid.x[far])
    np.testing.assert_allclose(ratio, 1.0, atol=1e-8)


def test_speed_derivative_pairs_with_profile(grid, soliton) -> None:
    """<Q, dQ/dc> = dH1/dc = delta (a + c da/dc)."""
    q = sample_soliton(soliton, grid)
    expected = soliton.delta * (soliton.a + soliton.c * da_dc(soliton))
    assert inner_product(q, soliton_dc(soliton, grid)) == pytest.approx(expected, rel=1e-7)


@pytest.mark.parametrize("speeds", [(2.0, 1.0), (1.0, 1.0), (0.0, 1.0), ()])
def test_spec_rejects_unordered_speeds(speeds) -> None:
    """Speeds must be positive and strictly increasing."""
    with pytest.raises(InvalidParameter, match="increasing"):
        MultiSolitonSpec.from_lists(speeds, [0.0] * len(speeds))


def test_spec_pairs_lists() -> None:
    """Lists of different length cannot be paired."""
    with pytest.raises(InvalidParameter):
        MultiSolitonSpec.from_lists([1.0, 2.0], [0.0])
    spec = MultiSolitonSpec.from_lists([1, 2], [-20, 20])
    assert spec.speeds == (1.0, 2.0)
    assert spec.positions == (-20.0, 20.0)
    assert spec.count == 2


def test_periodic_separation() -> None:
    """Distances wrap around the circle."""
    assert periodic_separation([-45.0, 45.0], 100.0) == pytest.approx(10.0)
    assert periodic_separation([-20.0, 20.0], 100.0) == pytest.approx(40.0)
    assert periodic_separation([0.0], 100.0) == math.inf


def test_superpose_sums_constituents(grid) -> None:
    """The superposition is the plain sum, with its separation in tail units."""
    spec = MultiSolitonSpec.from_lists([1.0, 2.0], [-20.0, 20.0])
    superposition = superpose(spec, 1.0, grid)
    slow, fast = superposition.solitons
    expected = sample_soliton(slow, grid).values + sample_soliton(fast, grid).values
    np.testing.assert_allclose(superposition.field.values, expected, atol=1e-15)
    assert superposition.min_separation == pytest.approx(40.0)
    assert superposition.tail_units == pytest.approx(40.0 * slow.a)


def test_superpose_dc_is_constituent_derivative(grid) -> None:
    """Only the j-th constituent depends on c_j."""
    spec = MultiSolitonSpec.from_lists([1.0, 2.0], [-20.0, 20.0])
    expected = soliton_dc(solve_transcendental(2.0, 1.0, x0=20.0), grid)
    np.testing.assert_array_equal(superpose_dc(spec, 1.0, grid, 1).values, expected.values)


def test_single_soliton_has_no_tail_units(grid) -> None:
    """A lone soliton reports no separation in tail units, so summaries stay valid JSON."""
    superposition = superpose(MultiSolitonSpec.from_lists([1.0], [0.0]), 1.0, grid)
    assert superposition.min_separation == math.inf
    assert superposition.tail_units is None
    assert json.loads(json.dumps({"tail_units": superposition.tail_units})) == {"tail_units": None}


def test_spectral_tail_flags_under_resolved_profiles(grid, fine_grid) -> None:
    """The c=2 profile needs twice the points the c=1 profile does on L=100."""
    slow, fast = solve_transcendental(1.0, 1.0), solve_transcendental(2.0, 1.0)
    assert 1e-11 < spectral_tail(slow, grid) < 1e-8
    assert spectral_tail(fast, grid) > 1e-6
    assert spectral_tail(fast, fine_grid) < 1e-9
