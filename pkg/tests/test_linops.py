"""Test operator assembly, inertia counts and the multiplier Hessian."""
from __future__ import annotations

import math

import numpy as np
import pytest

from ilw_lab.exceptions import InvalidParameter, NumericalFailure
from ilw_lab.functionals import G_formula, critical_multipliers, grad_H, gradient_values, hpp_apply, soliton_level
from ilw_lab.linops import (
    OperatorKind,
    SecondVariation,
    assemble_combo,
    assemble_Hpp,
    calibrate_zero_tol,
    chain_coefficient,
    eig_inertia,
    hessian_D,
    lambda1_formula,
    level_chain,
    min_eigenvalue,
    operator_multipliers,
    projected_min_eig,
    psi_check,
    taylor_check,
    taylor_spread,
    zero_space_angle,
)
from ilw_lab.soliton import sample_soliton, soliton_dc, solve_transcendental
from ilw_lab.spectral_core import Field, band_limited_field, derivative, dispersion_w, inner_product, l2_norm, make_grid


def test_inertia_of_small_matrices() -> None:
    """Counts follow the zero threshold."""
    report = eig_inertia(SecondVariation.from_matrix(np.diag([-1.0, 0.0, 2.0])), 1e-12)
    assert report.inertia == (1, 1)
    assert report.resolved
    assert report.gap == pytest.approx(1.0)
    assert eig_inertia(SecondVariation.from_matrix(np.eye(4)), 1e-12).inertia == (0, 0)
    assert set(report.as_dict()) >= {"n_neg", "n_zero", "zero_tol", "gap", "resolved", "lowest"}


def test_from_matrix_symmetrizes() -> None:
    """An asymmetric input is averaged with its transpose and the defect kept."""
    A = SecondVariation.from_matrix(np.array([[1.0, 2.0], [0.0, 1.0]]))
    np.testing.assert_array_equal(A.matrix, [[1.0, 1.0], [1.0, 1.0]])
    assert A.symmetry_defect == 2.0
    assert A.weight == 1.0


def test_projected_minimum() -> None:
    """Restricting to a complement removes the constrained directions."""
    e1 = np.array([1.0, 0.0, 0.0])
    assert projected_min_eig(SecondVariation.from_matrix(np.eye(3)), [e1]) == pytest.approx(1.0)
    A = SecondVariation.from_matrix(np.diag([-1.0, 1.0, 2.0]))
    assert projected_min_eig(A, [e1]) == pytest.approx(1.0)
    assert projected_min_eig(A, [], rank_one=(e1, 3.0)) == pytest.approx(1.0)
    with pytest.raises(NumericalFailure, match="rank"):
        projected_min_eig(A, [e1, 2.0 * e1])


def test_identity_and_symmetry(small_grid, random_fields) -> None:
    """H1'' is the identity and H3'' assembles to a symmetric matrix that matches its action."""
    u, z = random_fields[0], random_fields[1]
    np.testing.assert_array_equal(assemble_Hpp(1, u, 1.0).matrix, np.eye(small_grid.num_points))
    A = assemble_Hpp(3, u, 1.0)
    assert A.symmetry_defect <= 1e-10 * np.max(np.abs(A.matrix))
    np.testing.assert_allclose(A.apply(z), hpp_apply(3, u, z, 1.0).values, atol=1e-10)


def test_L1_at_zero_is_the_dispersion_symbol() -> None:
    """At u = 0 the spectrum of L1 is w(k/L) - 1/delta + c."""
    grid = make_grid(64, 20.0)
    A = assemble_combo(OperatorKind.L1, Field.zeros(grid), (0.7,), 1.3)
    expected = np.sort(dispersion_w(grid.xi, 1.3) - 1 / 1.3 + 0.7)
    np.testing.assert_allclose(np.linalg.eigvalsh(A.matrix), expected, atol=1e-10)


def test_L1_at_soliton(grid, soliton) -> None:
    """L1 has one negative direction, a kernel along Q_x and maps dQ/dc to -Q."""
    q = sample_soliton(soliton, grid)
    qx = derivative(grid, 1)(q)
    A = assemble_combo("L1", q, (1.0,), 1.0)
    report = eig_inertia(A, calibrate_zero_tol(A, [qx]))
    assert report.inertia == (1, 1)
    assert report.resolved
    assert zero_space_angle(report, qx) <= 1e-4

    dq = soliton_dc(soliton, grid)
    image = dq.with_values(A.apply(dq))
    assert l2_norm(image + q) <= 1e-4 * l2_norm(q)
    assert inner_product(image, dq) == pytest.approx(-0.5 * G_formula(soliton), rel=1e-4)
    assert min_eigenvalue(A) == pytest.approx(report.eigenvalues[0])


@pytest.mark.parametrize(("kind", "speeds"), [(OperatorKind.L2, (1.0,)), (OperatorKind.T1J, (1.0, 2.0))])
def test_speed_derivative_chain(kind, speeds, grid, soliton) -> None:
    """dQ/dc maps to the predicted multiple of Q and Q_x stays in the kernel."""
    q = sample_soliton(soliton, grid)
    qx = derivative(grid, 1)(q)
    A = assemble_combo(kind, q, speeds, 1.0)
    image = q.with_values(A.apply(soliton_dc(soliton, grid)))
    assert l2_norm(image - level_chain(kind, speeds, 1.0, grid)) <= 1e-4 * l2_norm(q)
    assert np.linalg.norm(A.apply(qx)) <= 1e-7 * np.max(np.abs(A.matrix)) * np.linalg.norm(qx.values)


def test_operator_multipliers() -> None:
    """L1 uses (c), L2 uses (alpha/c, 0), pairs use the critical multipliers."""
    assert operator_multipliers("L1", (1.5,), 1.0).mu == (1.5,)
    p = solve_transcendental(1.5, 1.0)
    assert operator_multipliers("L2", (1.5,), 1.0).mu == pytest.approx((soliton_level(3, p) / 1.5, 0.0))
    assert operator_multipliers("S2pp", (1.0, 2.0), 1.0).mu == critical_multipliers((1.0, 2.0), 1.0).mu
    assert chain_coefficient("L1", (1.5,), 1.0) == -1.0


def test_combo_validation(small_grid, random_fields) -> None:
    """Unknown kinds, missing speeds and bad penalties are refused."""
    u = random_fields[0]
    with pytest.raises(InvalidParameter, match="Unknown operator kind"):
        assemble_combo("L7", u, (1.0,), 1.0)
    with pytest.raises(InvalidParameter, match="two speeds"):
        assemble_combo(OperatorKind.T1J, u, (1.0,), 1.0)
    with pytest.raises(InvalidParameter, match="Penalty"):
        assemble_combo(OperatorKind.AUGMENTED, u, (1.0, 2.0), 1.0, penalty=0.0)


def test_augmented_adds_rank_two_penalty(small_grid, random_fields) -> None:
    """On its own targets the augmented Hessian is S2'' plus C h sum g g^T."""
    u = random_fields[0]
    plain = assemble_combo(OperatorKind.S2PP, u, (1.0, 2.0), 1.0)
    augmented = assemble_combo(OperatorKind.AUGMENTED, u, (1.0, 2.0), 1.0, penalty=5.0)
    g1 = gradient_values(1, u.values, small_grid, 1.0)
    g2 = gradient_values(2, u.values, small_grid, 1.0)
    expected = plain.matrix + 5.0 * small_grid.spacing * (np.outer(g1, g1) + np.outer(g2, g2))
    np.testing.assert_allclose(augmented.matrix, expected, atol=1e-9 * np.max(np.abs(expected)))


@pytest.mark.parametrize(("c", "expected"), [(1.0, 0.0), (2.0, -0.1510)])
def test_lambda1_formula(c, expected) -> None:
    """The closed form vanishes at c = 1/delta and is negative above it."""
    assert lambda1_formula(c, 1.0) == pytest.approx(expected, abs=1e-3)


@pytest.mark.slow
def test_lambda1_grid_cauchy() -> None:
    """The bottom of L1 at c = 2 is converged in N."""
    values = []
    for num_points in (1024, 2048):
        grid = make_grid(num_points, 50.0)
        q = sample_soliton(solve_transcendental(2.0, 1.0), grid)
        values.append(min_eigenvalue(assemble_combo(OperatorKind.L1, q, (2.0,), 1.0)))
    assert abs(values[0] - values[1]) <= 1e-6


def test_hessian_single_soliton() -> None:
    """For one soliton D = G > 0."""
    hessian = hessian_D((1.0,), 1.0)
    np.testing.assert_allclose(hessian.D, [[G_formula(solve_transcendental(1.0, 1.0))]])
    assert hessian.p_pos == hessian.predicted_p == 1


def test_hessian_pair_congruence() -> None:
    """J^T D J is diag(G1 (c2 - c1), G2 (c1 - c2))."""
    hessian = hessian_D((1.0, 2.0), 1.0)
    g1, g2 = (G_formula(solve_transcendental(c, 1.0)) for c in (1.0, 2.0))
    np.testing.assert_allclose(hessian.congruence, np.diag([g1, -g2]), atol=1e-12 * max(g1, g2))
    np.testing.assert_allclose(hessian.diagonal_form, [g1, -g2])
    assert hessian.symmetry_defect <= 1e-12
    assert hessian.p_pos == 1


@pytest.mark.parametrize("count", [3, 4, 5])
def test_hessian_positive_count(count) -> None:
    """D has ceil(n/2) positive eigenvalues and an alternating diagonal."""
    speeds = tuple(0.4 + 0.6 * j for j in range(count))
    hessian = hessian_D(speeds, 1.0)
    assert hessian.p_pos == hessian.predicted_p == (count + 1) // 2
    np.testing.assert_array_equal(np.sign(hessian.diagonal_form), [(-1.0) ** j for j in range(count)])
    assert hessian.symmetry_defect <= 1e-8


def test_psi_direction(fine_grid) -> None:
    """S2'' maps the speed-difference direction to the predicted soliton combination."""
    report = psi_check(1.0, 2.0, 60.0, 1.0, fine_grid)
    assert report.residual <= 1e-3
    assert report.form_value == pytest.approx(report.predicted_form, rel=1e-2)
    assert report.tail_units > 60.0
    with pytest.raises(InvalidParameter, match="must differ"):
        psi_check(1.0, 1.0, 60.0, 1.0, fine_grid)


def test_taylor_remainder(random_fields) -> None:
    """Remainders are cubic for S2, vanish for H1 and need a unit direction."""
    u, z = random_fields[0], random_fields[1]
    eps = (1e-2, 3e-3, 1e-3)
    ratios = taylor_check(u, z, 1.0, 2.0, 1.0, eps)
    assert min(ratios) > 0
    assert max(ratios) / min(ratios) <= 2.0
    assert taylor_spread(ratios) == pytest.approx(max(ratios) / min(ratios))
    quadratic = taylor_check(u, z, 1.0, 2.0, 1.0, eps, functional="H1")
    assert max(r * e**3 for r, e in zip(quadratic, eps)) <= 1e-12
    assert taylor_check(u, 0.0 * z, 1.0, 2.0, 1.0, eps) == [0.0, 0.0, 0.0]
    with pytest.raises(InvalidParameter, match="unit"):
        taylor_check(u, 2.0 * z, 1.0, 2.0, 1.0, eps)
    with pytest.raises(InvalidParameter):
        taylor_check(u, z, 1.0, 2.0, 1.0, eps, functional="H7")
    assert math.isfinite(sum(ratios))


def test_taylor_spread() -> None:
    """The spread is max over min, with zero remainders handled."""
    assert taylor_spread([1.0, 1.5, 1.2]) == pytest.approx(1.5)
    assert taylor_spread([0.0, 0.0, 0.0]) == 1.0
    assert taylor_spread([0.0, 1e-3]) == math.inf
    assert taylor_spread([3.0, 1.0]) > 2.0


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("m", [2, 3])
def test_assembled_hessian_matches_gradient_difference(m, seed, small_grid) -> None:
    """The assembled H_m''(u) applied to f equals the central difference of grad H_m along f."""
    rng = np.random.default_rng(seed)
    u, f = (band_limited_field(small_grid, rng, small_grid.num_points // 8) for _ in range(2))
    eps = 1e-5
    difference = (grad_H(m, u + eps * f, 1.0) - grad_H(m, u - eps * f, 1.0)) / (2 * eps)
    applied = f.with_values(assemble_Hpp(m, u, 1.0).apply(f))
    assert l2_norm(difference - applied) <= 1e-5 * l2_norm(applied)
