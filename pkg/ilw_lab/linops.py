"""Dense second-variation operators, inertia counts, projected coercivity and the multiplier Hessian."""
from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np
from scipy import linalg

from .const import DEFAULT_PENALTY, GAP_FACTOR, LOGGER, SYMMETRY_LIMIT, ZERO_TOL_FACTOR, ZERO_TOL_FLOOR
from .exceptions import InvalidParameter, NumericalFailure
from .functionals import (
    ConstraintTargets,
    G_formula,
    MultiplierSet,
    check_speeds,
    critical_multipliers,
    eval_H,
    eval_lyapunov,
    gradient_values,
    grad_H,
    grad_lyapunov,
    lyapunov_second_variation_values,
    second_variation_values,
    soliton_level,
    soliton_level_dc,
    vieta,
)
from .soliton import MultiSolitonSpec, sample_soliton, solve_transcendental, superpose, superpose_dc
from .spectral_core import Field, Grid, inner_product, l2_norm

ASSEMBLY_BLOCK = 256


class OperatorKind(str, Enum):
    """Second-variation combinations that can be assembled."""

    L1 = "L1"
    L2 = "L2"
    T1J = "T1j"
    S2PP = "S2pp"
    AUGMENTED = "augmented"


@dataclass(frozen=True, eq=False)
class SecondVariation:
    """Symmetric matrix of a linearized operator in the sample basis."""

    grid: Grid | None
    matrix: np.ndarray
    label: str
    params: tuple = ()
    symmetry_defect: float = 0.0

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, label: str = "matrix", grid: Grid | None = None) -> SecondVariation:
        """Wrap an explicit matrix, symmetrizing it."""
        matrix = np.asarray(matrix, dtype=float)
        defect = float(np.max(np.abs(matrix - matrix.T))) if matrix.size else 0.0
        return cls(grid, 0.5 * (matrix + matrix.T), label, (), defect)

    @property
    def weight(self) -> float:
        """Return the quadrature weight h of the sample basis."""
        return self.grid.spacing if self.grid is not None else 1.0

    def apply(self, z: Field | np.ndarray) -> np.ndarray:
        """Return the matrix-vector product on raw samples."""
        values = z.values if isinstance(z, Field) else np.asarray(z, dtype=float)
        return self.matrix @ values


@dataclass(frozen=True, eq=False)
class InertiaReport:
    """Eigenvalues with negative and zero counts under an explicit threshold."""

    eigenvalues: np.ndarray
    n_neg: int
    n_zero: int
    zero_tol: float
    gap: float
    resolved: bool
    label: str = ""
    eigenvectors: np.ndarray | None = field(default=None, repr=False)

    @property
    def inertia(self) -> tuple[int, int]:
        """Return (n_neg, n_zero)."""
        return self.n_neg, self.n_zero

    def as_dict(self) -> dict[str, object]:
        """Return the JSON summary of the report."""
        return {
            "label": self.label,
            "n_neg": self.n_neg,
            "n_zero": self.n_zero,
            "zero_tol": self.zero_tol,
            "gap": self.gap,
            "resolved": self.resolved,
            "lowest": [float(x) for x in self.eigenvalues[: self.n_neg + self.n_zero + 2]],
        }


def _assemble(grid: Grid, action: Callable[[np.ndarray], np.ndarray], label: str, params: tuple) -> SecondVariation:
    """Apply the operator to every canonical basis vector, in blocks."""
    size = grid.num_points
    rows = np.empty((size, size))
    for start in range(0, size, ASSEMBLY_BLOCK):
        stop = min(start + ASSEMBLY_BLOCK, size)
        basis = np.zeros((stop - start, size))
        basis[np.arange(stop - start), np.arange(start, stop)] = 1.0
        rows[start:stop] = action(basis)
    matrix = rows.T
    defect = float(np.max(np.abs(matrix - matrix.T)))
    if defect > SYMMETRY_LIMIT * max(1.0, float(np.max(np.abs(matrix)))):
        LOGGER.warning("Operator %s has symmetry defect %.3e before symmetrization", label, defect)
    LOGGER.debug("Assembled %s (N=%s), symmetry defect %.3e", label, size, defect)
    return SecondVariation(grid, 0.5 * (matrix + matrix.T), label, params, defect)


def assemble_Hpp(m: int, u: Field, delta: float) -> SecondVariation:
    """Assemble H_m''(u)."""
    return _assemble(
        u.grid,
        lambda z: second_variation_values(m, u.values, z, u.grid, delta),
        f"H{m}''",
        (delta,),
    )


def operator_multipliers(kind: OperatorKind | str, speeds: Sequence[float], delta: float) -> MultiplierSet:
    """Return the multipliers defining a Lyapunov-type operator kind."""
    kind = _operator_kind(kind)
    if kind is OperatorKind.L1:
        return MultiplierSet((float(speeds[0]),), (float(speeds[0]),), "L1")
    if kind is OperatorKind.L2:
        p = solve_transcendental(speeds[0], delta)
        return MultiplierSet((soliton_level(3, p) / p.c, 0.0), (p.c,), "L2")
    return critical_multipliers(speeds, delta)


def _operator_kind(kind: OperatorKind | str) -> OperatorKind:
    try:
        return OperatorKind(kind)
    except ValueError as error:
        raise InvalidParameter("invalid_kind", {"kind": kind}) from error


def assemble_combo(
    kind: OperatorKind | str,
    u: Field,
    speeds: Sequence[float],
    delta: float,
    *,
    penalty: float = DEFAULT_PENALTY,
    multipliers: MultiplierSet | None = None,
    targets: ConstraintTargets | None = None,
) -> SecondVariation:
    """Assemble L_m, T_1j, S_2'' or the augmented Hessian at u."""
    kind = _operator_kind(kind)
    if kind in (OperatorKind.T1J, OperatorKind.S2PP, OperatorKind.AUGMENTED):
        check_speeds(speeds)
        if len(speeds) != 2:
            raise InvalidParameter("missing_argument", {"kind": kind.value, "argument": "two speeds"})
    multipliers = multipliers or operator_multipliers(kind, speeds, delta)
    grid = u.grid
    params = (delta, *speeds)

    def lyapunov_action(z: np.ndarray) -> np.ndarray:
        return lyapunov_second_variation_values(u.values, z, grid, multipliers, delta)

    if kind is not OperatorKind.AUGMENTED:
        return _assemble(grid, lyapunov_action, kind.value, params)

    if not penalty > 0:
        raise InvalidParameter("invalid_penalty", {"penalty": penalty})
    targets = targets or ConstraintTargets.from_state(u, 2, delta)
    gradients = np.array([gradient_values(m, u.values, grid, delta) for m in (1, 2)])
    misfits = [eval_H(m, u, delta) - target for m, target in zip((1, 2), targets.values)]

    def augmented_action(z: np.ndarray) -> np.ndarray:
        out = lyapunov_action(z)
        projections = grid.spacing * (z @ gradients.T)
        out = out + penalty * projections @ gradients
        for m, misfit in zip((1, 2), misfits):
            if misfit:
                out = out + penalty * misfit * second_variation_values(m, u.values, z, grid, delta)
        return out

    return _assemble(grid, augmented_action, kind.value, (*params, penalty))


def chain_coefficient(kind: OperatorKind | str, speeds: Sequence[float], delta: float, index: int = 0) -> float:
    """Return k with A dQ_c/dc = k Q_c at the soliton of speeds[index]."""
    kind = _operator_kind(kind)
    p = solve_transcendental(speeds[index], delta)
    if kind is OperatorKind.L1:
        return -1.0
    if kind is OperatorKind.L2:
        return soliton_level_dc(3, p) - soliton_level(3, p) / p.c
    if kind in (OperatorKind.T1J, OperatorKind.S2PP):
        return soliton_level_dc(3, p) - critical_multipliers(speeds, delta).mu[0]
    raise InvalidParameter("invalid_kind", {"kind": kind.value})


def level_chain(kind: OperatorKind | str, speeds: Sequence[float], delta: float, g: Grid, index: int = 0) -> Field:
    """Return the predicted image of dQ_c/dc under the operator kind."""
    p = solve_transcendental(speeds[index], delta)
    return chain_coefficient(kind, speeds, delta, index) * sample_soliton(p, g)


def calibrate_zero_tol(A: SecondVariation, kernel_vectors: Sequence[Field | np.ndarray]) -> float:
    """Return 10 x the largest relative image of the known kernel vectors, floored by roundoff."""
    defect = 0.0
    for vector in kernel_vectors:
        values = vector.values if isinstance(vector, Field) else np.asarray(vector, dtype=float)
        defect = max(defect, float(np.linalg.norm(A.apply(values)) / np.linalg.norm(values)))
    floor = ZERO_TOL_FLOOR * float(np.max(np.sum(np.abs(A.matrix), axis=1)))
    return max(ZERO_TOL_FACTOR * defect, floor)


def eig_inertia(A: SecondVariation, zero_tol: float) -> InertiaReport:
    """Diagonalize A and count eigenvalues below and inside [-zero_tol, zero_tol]."""
    try:
        eigenvalues, eigenvectors = linalg.eigh(A.matrix)
    except (linalg.LinAlgError, ValueError) as error:
        LOGGER.error("Eigensolver failed for %s: %s", A.label, error)
        raise NumericalFailure("eigensolver_failed", {"label": A.label, "error": error}) from error

    magnitudes = np.abs(eigenvalues)
    zero = magnitudes <= zero_tol
    n_neg = int(np.sum(eigenvalues < -zero_tol))
    n_zero = int(np.sum(zero))
    nonzero = magnitudes[~zero]
    gap = float(nonzero.min() - (magnitudes[zero].max() if n_zero else 0.0)) if nonzero.size else 0.0
    resolved = gap > GAP_FACTOR * zero_tol
    LOGGER.debug("Inertia of %s: (%s, %s), tol %.3e, gap %.3e", A.label, n_neg, n_zero, zero_tol, gap)
    return InertiaReport(eigenvalues, n_neg, n_zero, float(zero_tol), gap, bool(resolved), A.label, eigenvectors)


def min_eigenvalue(A: SecondVariation) -> float:
    """Return the smallest eigenvalue of A."""
    try:
        return float(linalg.eigvalsh(A.matrix, subset_by_index=[0, 0])[0])
    except (linalg.LinAlgError, ValueError) as error:
        raise NumericalFailure("eigensolver_failed", {"label": A.label, "error": error}) from error


def zero_space_angle(report: InertiaReport, vector: Field | np.ndarray) -> float:
    """Return the angle between a vector and the zero eigenspace of a report."""
    if report.eigenvectors is None or not report.n_zero:
        return math.pi / 2
    values = vector.values if isinstance(vector, Field) else np.asarray(vector, dtype=float)
    zero = np.abs(report.eigenvalues) <= report.zero_tol
    basis = report.eigenvectors[:, zero]
    inside = basis @ (basis.T @ values)
    return float(math.atan2(np.linalg.norm(values - inside), np.linalg.norm(inside)))


def projected_min_eig(
    A: SecondVariation,
    constraints: Sequence[Field | np.ndarray],
    rank_one: tuple[Field | np.ndarray, float] | None = None,
) -> float:
    """Return the smallest eigenvalue of A restricted to the orthogonal complement of the constraints."""
    rows = np.array([c.values if isinstance(c, Field) else np.asarray(c, dtype=float) for c in constraints])
    matrix = A.matrix
    if rank_one is not None:
        vector, weight = rank_one
        values = vector.values if isinstance(vector, Field) else np.asarray(vector, dtype=float)
        matrix = matrix + weight * A.weight * np.outer(values, values)
    if rows.size:
        rank = int(np.linalg.matrix_rank(rows))
        if rank < len(rows):
            raise NumericalFailure("rank_deficient", {"count": len(rows), "rank": rank})
        basis = linalg.null_space(rows)
        matrix = basis.T @ matrix @ basis
    try:
        return float(linalg.eigvalsh(matrix)[0])
    except linalg.LinAlgError as error:
        raise NumericalFailure("eigensolver_failed", {"label": A.label, "error": error}) from error


def lambda1_formula(c: float, delta: float) -> float:
    """Return -(c - 1/delta) / (2 a^2 sin^2(a delta))."""
    p = solve_transcendental(c, delta)
    return -(c - 1.0 / delta) / (2.0 * p.a**2 * math.sin(p.theta) ** 2)


@dataclass(frozen=True, eq=False)
class HessianD:
    """Hessian of S_n with respect to the multipliers and its congruent diagonal."""

    n: int
    D: np.ndarray
    p_pos: int
    diagonal_form: np.ndarray
    congruence: np.ndarray
    symmetry_defect: float

    @property
    def predicted_p(self) -> int:
        """Return the number of positive entries of the congruent diagonal."""
        return int(np.sum(self.diagonal_form > 0))


def _elementary_symmetric(values: Sequence[float]) -> np.ndarray:
    """Return e_0..e_n of the values."""
    return np.atleast_1d(np.poly(-np.asarray(values, dtype=float)))


def hessian_D(speeds: Sequence[float], delta: float) -> HessianD:
    """Build D = d^2 S_n / d mu^2 from dH_j/dc_k and the inverse Vieta Jacobian."""
    values = check_speeds(speeds)
    n = len(values)
    g_values = np.array([G_formula(solve_transcendental(c, delta)) for c in values])
    speeds_array = np.array(values)

    # dH_j/dc_k = (-1)^(j-1) G_k c_k^(j-1), j = 1..n
    powers = np.arange(n)
    dH_dc = ((-speeds_array[:, None]) ** powers[None, :]) * g_values[:, None]

    # J[m, k] = d mu_m / d c_k = e_{m-1}(speeds without c_k)
    jacobian = np.empty((n, n))
    for k in range(n):
        reduced = _elementary_symmetric(np.delete(speeds_array, k))
        jacobian[:, k] = reduced[:n]
    # Row m of D differentiates dS/dmu_m = H_{n+1-m}.
    gradient_rows = dH_dc[:, ::-1].T
    D = gradient_rows @ np.linalg.inv(jacobian)
    congruence = jacobian.T @ D @ jacobian
    symmetric = 0.5 * (D + D.T)
    scale = max(1.0, float(np.max(np.abs(D))))
    p_pos = int(np.sum(linalg.eigvalsh(symmetric) > 0))
    diagonal = np.array(
        [g_values[j] * np.prod([values[k] - values[j] for k in range(n) if k != j]) for j in range(n)]
    )
    LOGGER.debug("Hessian D for speeds %s: p=%s, diagonal %s", values, p_pos, diagonal)
    return HessianD(n, D, p_pos, diagonal, congruence, float(np.max(np.abs(D - D.T))) / scale)


@dataclass(frozen=True)
class PsiReport:
    """Residual and quadratic form of S_2'' along the speed-difference direction."""

    residual: float
    form_value: float
    predicted_form: float
    vieta_residual: float
    vieta_form: float
    vieta_prediction: float
    tail_units: float | None


def psi_check(c1: float, c2: float, separation: float, delta: float, g: Grid) -> PsiReport:
    """Test S_2''(U) Psi against its predicted image for Psi = (dU/dc1 - dU/dc2) / (c1 - c2)."""
    if c1 == c2:
        raise InvalidParameter("equal_speeds", {"c1": c1, "c2": c2})
    speeds = check_speeds((c1, c2))
    spec = MultiSolitonSpec.from_lists(speeds, (-0.5 * separation, 0.5 * separation))
    superposition = superpose(spec, delta, g)
    u = superposition.field
    psi = (superpose_dc(spec, delta, g, 0) - superpose_dc(spec, delta, g, 1)) / (c1 - c2)
    multipliers = critical_multipliers(speeds, delta)
    mu1 = multipliers.mu[0]

    image = Field(g, np.zeros(g.num_points))
    predicted_form = 0.0
    sign = 1.0
    for p in superposition.solitons:
        slope = soliton_level_dc(3, p) - mu1
        image = image + sign * slope / (c1 - c2) * sample_soliton(p, g)
        predicted_form += slope * G_formula(p) / (2.0 * (c1 - c2) ** 2)
        sign = -sign

    applied = Field(g, lyapunov_second_variation_values(u.values, psi.values, g, multipliers, delta))
    norm_u = l2_norm(u)
    residual = l2_norm(applied - image) / norm_u
    form_value = inner_product(applied, psi)

    applied_vieta = Field(g, lyapunov_second_variation_values(u.values, psi.values, g, vieta(speeds), delta))
    g1, g2 = (G_formula(p) for p in superposition.solitons)
    LOGGER.debug("Psi residual %.3e, form %.6g (predicted %.6g)", residual, form_value, predicted_form)
    return PsiReport(
        residual=residual,
        form_value=form_value,
        predicted_form=predicted_form,
        vieta_residual=l2_norm(applied_vieta + u) / norm_u,
        vieta_form=inner_product(applied_vieta, psi),
        vieta_prediction=(g1 - g2) / (c2 - c1),
        tail_units=superposition.tail_units,
    )


def taylor_check(
    U: Field,
    z: Field,
    c1: float,
    c2: float,
    delta: float,
    eps_list: Sequence[float],
    functional: str = "S2",
    multipliers: MultiplierSet | None = None,
) -> list[float]:
    """Return |F(U+ez) - F(U) - e<F'(U),z> - e^2<F''(U)z,z>/2| / e^3 for each e."""
    norm = l2_norm(z)
    if norm == 0:
        return [0.0 for _ in eps_list]
    if abs(norm - 1.0) > 1e-8:
        raise InvalidParameter("invalid_direction", {"norm": norm})

    if functional == "H1":
        value = lambda w: eval_H(1, w, delta)  # noqa: E731
        gradient = grad_H(1, U, delta)
        curvature = z
    elif functional == "S2":
        multipliers = multipliers or critical_multipliers((c1, c2), delta)
        value = lambda w: eval_lyapunov(w, multipliers, delta)  # noqa: E731
        gradient = grad_lyapunov(U, multipliers, delta)
        curvature = Field(U.grid, lyapunov_second_variation_values(U.values, z.values, U.grid, multipliers, delta))
    else:
        raise InvalidParameter("invalid_kind", {"kind": functional})

    base = value(U)
    linear = inner_product(gradient, z)
    quadratic = inner_product(curvature, z)
    ratios = []
    for eps in eps_list:
        remainder = abs(value(U + eps * z) - base - eps * linear - 0.5 * eps * eps * quadratic)
        ratios.append(remainder / eps**3)
    return ratios


def taylor_spread(ratios: Sequence[float]) -> float:
    """Return max/min of the remainder ratios; a cubic remainder keeps this near 1."""
    largest, smallest = max(ratios), min(ratios)
    if largest == 0:
        return 1.0
    if smallest == 0:
        return math.inf
    return largest / smallest
