"""Group level arithmetic for SL(2,C) and its semidirect tower.

Level 0 elements are 2x2 complex matrices.  An element of level m >= 1 is a
pair (a, X) with a of level m-1 and X in the algebra of level m-1, multiplied
by (a, X)•(b, Y) = (ab, Ad_{b⁻¹}X + Y).  The plus side is SU(2) at level 0
and the minus side is the upper triangular group B with positive diagonal.
"""

from __future__ import annotations

import functools
import logging
import math
from collections.abc import Callable
from dataclasses import InitVar, dataclass

import numpy as np
from scipy import linalg

from .const import (
    CONDITION_LIMIT,
    DET_TOLERANCE,
    MEMBERSHIP_TOLERANCE,
    SERIES_MAX_TERMS,
    SERIES_TOLERANCE,
    TRACE_TOLERANCE,
    TRIANGULAR_TOLERANCE,
    UNITARY_TOLERANCE,
)
from .exceptions import (
    FactorizationFailed,
    GroupInvariantViolation,
    LevelMismatch,
    SeriesNotConverged,
    SubalgebraMembershipError,
)
from .lie_core import (
    AlgebraElement,
    CoalgebraElement,
    Side,
    adjoint_matrix,
    bracket,
    require_side,
    structure_bracket,
)
from .sl2c_model import build_model, matrix_coefficients, realize_values, tower_level

_LOGGER = logging.getLogger(__name__)

IDENTITY_MATRIX = np.eye(2, dtype=complex)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """An element of SL(2,C), optionally tagged as SU(2) (plus) or B (minus)."""

    matrix: np.ndarray
    side: Side | None = None
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        matrix = np.array(self.matrix, dtype=complex).reshape(2, 2)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "checked", validate)
        if validate:
            self.check()

    @property
    def level(self) -> int:
        return 0

    @property
    def entries(self) -> tuple[complex, complex, complex, complex]:
        return tuple(complex(value) for value in self.matrix.ravel())

    def check(self) -> None:
        """Raise GroupInvariantViolation when the tagged invariants fail."""
        drift = abs(np.linalg.det(self.matrix) - 1.0)
        if drift > DET_TOLERANCE:
            raise GroupInvariantViolation(f"determinant drifted from 1 by {drift:.3e}")
        if self.side == "plus":
            defect = np.max(np.abs(self.matrix.conj().T @ self.matrix - IDENTITY_MATRIX))
            if defect > UNITARY_TOLERANCE:
                raise GroupInvariantViolation(f"SU(2) element is not unitary, defect {defect:.3e}")
        elif self.side == "minus":
            if abs(self.matrix[1, 0]) > TRIANGULAR_TOLERANCE:
                raise GroupInvariantViolation("B element has a lower left entry")
            diagonal = np.diag(self.matrix)
            if np.any(np.abs(diagonal.imag) > TRIANGULAR_TOLERANCE) or np.any(diagonal.real <= 0):
                raise GroupInvariantViolation("B element needs a real positive diagonal")

    def __repr__(self) -> str:
        return f"GroupElement({self.matrix.tolist()!r}, side={self.side!r})"


@dataclass(frozen=True, eq=False)
class SemidirectGroupElement:
    """An element (base, fiber) of H ⊛ h one level above its base."""

    base: GroupElement | SemidirectGroupElement
    fiber: AlgebraElement
    side: Side | None = None
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        object.__setattr__(self, "checked", validate and self.base.checked)
        if self.fiber.descriptor.level != self.base.level:
            raise LevelMismatch(
                f"fiber of level {self.fiber.descriptor.level} over a base of level {self.base.level}"
            )
        if validate and self.side is not None:
            if self.base.side != self.side:
                raise GroupInvariantViolation(f"base is not on the {self.side} side")
            try:
                require_side(tower_level(self.base.level).split, self.fiber, self.side, "fiber")
            except SubalgebraMembershipError as err:
                raise GroupInvariantViolation(str(err)) from err

    @property
    def level(self) -> int:
        return self.base.level + 1

    def __repr__(self) -> str:
        return (
            f"SemidirectGroupElement(level={self.level}, side={self.side!r}, "
            f"base={self.base!r}, fiber={self.fiber!r})"
        )


AnyGroupElement = GroupElement | SemidirectGroupElement


def _same_level(g: AnyGroupElement, h: AnyGroupElement) -> None:
    if g.level != h.level:
        raise LevelMismatch(f"operands of levels {g.level} and {h.level}")


def _product_side(g: AnyGroupElement, h: AnyGroupElement) -> Side | None:
    return g.side if g.side == h.side else None


def identity(level: int = 0, side: Side | None = None) -> AnyGroupElement:
    """Return the identity of the given level."""
    if level == 0:
        return GroupElement(IDENTITY_MATRIX, side)
    return SemidirectGroupElement(identity(level - 1, side), tower_level(level - 1).zero(), side)


def group_mul(g: AnyGroupElement, h: AnyGroupElement) -> AnyGroupElement:
    """Return g·h at any level."""
    _same_level(g, h)
    if isinstance(g, GroupElement):
        return GroupElement(g.matrix @ h.matrix, _product_side(g, h), validate=g.checked and h.checked)
    return semidirect_mul(g, h)


def group_inverse(g: AnyGroupElement) -> AnyGroupElement:
    if isinstance(g, GroupElement):
        if not g.checked:
            return GroupElement(np.linalg.inv(g.matrix), g.side, validate=False)
        a, b, c, d = g.matrix.ravel()
        # det is 1 on the group
        return GroupElement(np.array([[d, -b], [-c, a]]), g.side)
    return semidirect_inverse(g)


def semidirect_mul(g: SemidirectGroupElement, h: SemidirectGroupElement) -> SemidirectGroupElement:
    """Return (a, X)•(b, Y) = (ab, Ad_{b⁻¹}X + Y)."""
    _same_level(g, h)
    fiber = adjoint(group_inverse(h.base), g.fiber) + h.fiber
    return SemidirectGroupElement(
        group_mul(g.base, h.base), fiber, _product_side(g, h), validate=g.checked and h.checked
    )


def semidirect_inverse(g: SemidirectGroupElement) -> SemidirectGroupElement:
    """Return (a, X)⁻¹ = (a⁻¹, −Ad_a X)."""
    return SemidirectGroupElement(group_inverse(g.base), -adjoint(g.base, g.fiber), g.side, validate=g.checked)


def adjoint(g: AnyGroupElement, x: AlgebraElement) -> AlgebraElement:
    """Return Ad_g x for an algebra element of the same level."""
    if x.descriptor.level != g.level:
        raise LevelMismatch(f"group of level {g.level} acting on algebra of level {x.descriptor.level}")
    if isinstance(g, GroupElement):
        return AlgebraElement(x.descriptor, flat_adjoint(flatten(g), 0, x.coefficients))
    return big_ad2(g, x)


def big_ad2(g: SemidirectGroupElement, x: AlgebraElement) -> AlgebraElement:
    """Return Ad_{(b,Z)}(X, Y) = (Ad_b X, Ad_b([Z, X] + Y))."""
    if x.descriptor.level != g.level:
        raise LevelMismatch(f"group of level {g.level} acting on algebra of level {x.descriptor.level}")
    return AlgebraElement(x.descriptor, flat_adjoint(flatten(g), g.level, x.coefficients))


def adjoint_operator(g: AnyGroupElement) -> np.ndarray:
    """Return the matrix of Ad_g in the basis of its algebra."""
    return flat_adjoint(flatten(g), g.level, np.eye(tower_level(g.level).dim)).T


def coadjoint(g: AnyGroupElement, xi: CoalgebraElement) -> CoalgebraElement:
    """Return Ad*_g xi with <Ad*_g xi, y> = <xi, Ad_g y>."""
    return CoalgebraElement(xi.descriptor, adjoint_operator(g).T @ xi.coefficients)


def projector_A(h: AnyGroupElement, side: Side, x: AlgebraElement) -> AlgebraElement:
    """Return 𝔸±(h)x = Ad_{h⁻¹}Π±Ad_h x."""
    model = tower_level(h.level)
    return adjoint(group_inverse(h), model.project(adjoint(h, x), side))


def iwasawa_factorize(g: GroupElement) -> tuple[GroupElement, GroupElement]:
    """Return (u, b) with g = u·b, u in SU(2) and b in B.

    b is the Cholesky factor of g†g with positive diagonal, u = g·b⁻¹.
    """
    condition = np.linalg.cond(g.matrix)
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise FactorizationFailed(f"matrix condition number {condition:.3e} is too large")
    try:
        lower = np.linalg.cholesky(g.matrix.conj().T @ g.matrix)
    except np.linalg.LinAlgError as err:
        raise FactorizationFailed("Cholesky factorization failed") from err
    upper = lower.conj().T
    scale = math.sqrt(abs(np.linalg.det(upper)))
    upper = upper / scale
    upper[1, 0] = 0.0
    upper[0, 0] = upper[0, 0].real
    upper[1, 1] = 1.0 / upper[0, 0].real
    unitary = g.matrix @ linalg.solve_triangular(upper, IDENTITY_MATRIX, lower=False)
    return GroupElement(unitary, "plus"), GroupElement(upper, "minus")


def factorize(g: AnyGroupElement) -> tuple[AnyGroupElement, AnyGroupElement]:
    """Return the (plus, minus) factors at any level."""
    if isinstance(g, GroupElement):
        return iwasawa_factorize(g)
    return semidirect_factorize(g)


def semidirect_factorize(
    h: SemidirectGroupElement,
) -> tuple[SemidirectGroupElement, SemidirectGroupElement]:
    """Split (h, Y) into (h⁺, Π₊Ad_{h⁻}Y)•(h⁻, Ad_{(h⁻)⁻¹}Π₋Ad_{h⁻}Y)."""
    plus_base, minus_base = factorize(h.base)
    model = tower_level(h.base.level)
    moved = adjoint(minus_base, h.fiber)
    plus = SemidirectGroupElement(plus_base, model.project(moved, "plus"), "plus")
    minus_fiber = model.project(adjoint(group_inverse(minus_base), model.project(moved, "minus")), "minus")
    minus = SemidirectGroupElement(minus_base, minus_fiber, "minus")
    return plus, minus


def exp_su2(x: AlgebraElement, t: float) -> GroupElement:
    """Return exp(i(t/2)x) = cosh(s/2)·I + i·(x/‖x‖)·sinh(s/2) with s = t‖x‖, for x in su(2)."""
    model = build_model()
    require_side(model.split, x, "plus", "exponent")
    norm = float(np.linalg.norm(x.coefficients))
    if norm == 0.0:
        return GroupElement(IDENTITY_MATRIX)
    scaled = t * norm
    matrix = math.cosh(scaled / 2) * IDENTITY_MATRIX + 1j * model.realize(x / norm) * math.sinh(scaled / 2)
    return GroupElement(matrix)


def exp_matrix(matrix: np.ndarray, tolerance: float = DET_TOLERANCE) -> GroupElement:
    """Return the exponential of a traceless 2x2 matrix."""
    matrix = np.asarray(matrix, dtype=complex)
    if abs(np.trace(matrix)) > TRACE_TOLERANCE:
        raise SubalgebraMembershipError("exponent is not traceless")
    result = linalg.expm(matrix)
    residual = np.max(np.abs(result @ linalg.expm(-matrix) - IDENTITY_MATRIX))
    if residual > tolerance * max(1.0, float(np.max(np.abs(result))) ** 2):
        raise SeriesNotConverged(f"matrix exponential residual {residual:.3e}")
    return GroupElement(result)


def semidirect_exp(
    x: AlgebraElement, t: float = 1.0, tolerance: float = SERIES_TOLERANCE
) -> SemidirectGroupElement:
    """Return Exp(t(X, Y)) = (e^{tX}, −Σ_{n≥1} ((−t)ⁿ/n!) (ad_X)^{n−1} Y)."""
    if x.descriptor.level < 1:
        raise LevelMismatch("semidirect exponential needs an algebra of level at least 1")
    first, second = x.halves()
    ad_first = adjoint_matrix(first)
    term = t * second.coefficients
    fiber = term.copy()
    for n in range(1, SERIES_MAX_TERMS + 1):
        if np.max(np.abs(term)) < tolerance:
            break
        term = (-t / (n + 1)) * (ad_first @ term)
        fiber = fiber + term
    else:
        raise SeriesNotConverged(f"semidirect exponential needs more than {SERIES_MAX_TERMS} terms")
    return SemidirectGroupElement(group_exp(first * t), AlgebraElement(first.descriptor, fiber))


def group_exp(x: AlgebraElement) -> AnyGroupElement:
    """Return the group exponential at the level of x."""
    if x.descriptor.level == 0:
        return exp_matrix(build_model().realize(x))
    return semidirect_exp(x, 1.0)


def random_element(
    rng: np.random.Generator, level: int, side: Side | None = None, scale: float = 1.0
) -> AnyGroupElement:
    """Return the exponential of an algebra element with uniform coefficients."""
    model = tower_level(level)
    x = model.element(rng.uniform(-scale, scale, model.dim))
    if side is not None:
        x = model.project(x, side)
    g = group_exp(x)
    return reproject(g, side) if side is not None else g


def reproject(g: AnyGroupElement, side: Side | None) -> AnyGroupElement:
    """Return the nearest element of SL(2,C), SU(2), B or their semidirect lifts."""
    return unflatten(flat_reproject(flatten(g), g.level, side), g.level, side)


def flatten(g: AnyGroupElement) -> np.ndarray:
    """Return real coordinates: 8 matrix reals at level 0, then fiber coefficients."""
    if isinstance(g, GroupElement):
        return np.concatenate([g.matrix.real.ravel(), g.matrix.imag.ravel()])
    return np.concatenate([flatten(g.base), g.fiber.coefficients])


@functools.cache
def flat_size(level: int) -> int:
    return 8 if level == 0 else flat_size(level - 1) + tower_level(level - 1).dim


def unflatten(
    values: np.ndarray, level: int, side: Side | None = None, validate: bool = True
) -> AnyGroupElement:
    """Inverse of flatten; validate=False accepts off-group intermediate stages."""
    values = np.asarray(values, dtype=float)
    if values.size != flat_size(level):
        raise LevelMismatch(f"{values.size} coordinates do not describe a level {level} element")
    if level == 0:
        matrix = (values[:4] + 1j * values[4:]).reshape(2, 2)
        return GroupElement(matrix, side, validate=validate)
    cut = flat_size(level - 1)
    base = unflatten(values[:cut], level - 1, side, validate)
    fiber = AlgebraElement(tower_level(level - 1).descriptor, values[cut:])
    return SemidirectGroupElement(base, fiber, side, validate=validate)


def tangent_flat(g: AnyGroupElement, velocity: AlgebraElement) -> np.ndarray:
    """Return d/dt flatten(g) for the left trivialized velocity g⁻¹ġ."""
    if velocity.descriptor.level != g.level:
        raise LevelMismatch(f"velocity of level {velocity.descriptor.level} at a group element of level {g.level}")
    return flat_tangent(flatten(g), g.level, velocity.coefficients)


def flat_to_velocity(g: AnyGroupElement, derivative: np.ndarray) -> AlgebraElement:
    """Return g⁻¹ġ from the derivative of the flat coordinates."""
    derivative = np.asarray(derivative, dtype=float)
    if isinstance(g, GroupElement):
        rate = (derivative[:4] + 1j * derivative[4:]).reshape(2, 2)
        inverse = np.linalg.inv(g.matrix)
        return build_model().to_coefficients(inverse @ rate, tolerance=1e-6)
    cut = flat_size(g.level - 1)
    first = flat_to_velocity(g.base, derivative[:cut])
    fiber_rate = AlgebraElement(g.fiber.descriptor, derivative[cut:])
    return AlgebraElement.from_halves(first, fiber_rate + bracket(first, g.fiber))


# Flat coordinate kernels ===============================================================
# Unvalidated arithmetic on the coordinates of flatten.  The object level
# functions above delegate here and the integrator calls these directly.

ADJUGATE_SIGNS = np.array([[1.0, -1.0], [-1.0, 1.0]])


def _matrix_of(values: np.ndarray) -> np.ndarray:
    return (values[:4] + 1j * values[4:8]).reshape(2, 2)


def _flat_of(matrix: np.ndarray) -> np.ndarray:
    return np.concatenate([matrix.real.ravel(), matrix.imag.ravel()])


def _determinant(matrix: np.ndarray) -> complex:
    return matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0]


def _inverse_matrix(matrix: np.ndarray) -> np.ndarray:
    return matrix[::-1, ::-1].T * ADJUGATE_SIGNS / _determinant(matrix)


def flat_adjoint(values: np.ndarray, level: int, x: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Return Ad_g x, or Ad_{g⁻¹} x, with g given by coordinates.

    x may carry leading batch axes.  Level 0 conjugates 2x2 matrices; above
    it (b, Z) sends (X, Y) to (Ad_b X, Ad_b([Z, X] + Y)) and its inverse
    sends (X, Y) to (X′, Ad_{b⁻¹}Y − [Z, X′]) with X′ = Ad_{b⁻¹}X.
    """
    x = np.asarray(x, dtype=float)
    if level == 0:
        matrix = _matrix_of(values)
        left, right = (_inverse_matrix(matrix), matrix) if inverse else (matrix, _inverse_matrix(matrix))
        return matrix_coefficients(left @ realize_values(x) @ right)
    cut = flat_size(level - 1)
    half = x.shape[-1] // 2
    first, second = x[..., :half], x[..., half:]
    fiber = values[cut:]
    constants = tower_level(level - 1).descriptor.structure_constants
    if inverse:
        moved = flat_adjoint(values[:cut], level - 1, np.stack([first, second], axis=-2), inverse=True)
        moved_first = moved[..., 0, :]
        return np.concatenate(
            [moved_first, moved[..., 1, :] - structure_bracket(constants, fiber, moved_first)], axis=-1
        )
    shifted = structure_bracket(constants, fiber, first) + second
    moved = flat_adjoint(values[:cut], level - 1, np.stack([first, shifted], axis=-2))
    return moved.reshape(x.shape)


def flat_tangent(values: np.ndarray, level: int, velocity: np.ndarray) -> np.ndarray:
    """Return d/dt of the coordinates for the left trivialized velocity g⁻¹ġ."""
    if level == 0:
        return _flat_of(_matrix_of(values) @ realize_values(velocity))
    cut = flat_size(level - 1)
    half = velocity.size // 2
    first, second = velocity[:half], velocity[half:]
    constants = tower_level(level - 1).descriptor.structure_constants
    fiber_rate = second - structure_bracket(constants, first, values[cut:])
    return np.concatenate([flat_tangent(values[:cut], level - 1, first), fiber_rate])


def flat_right_tangent(values: np.ndarray, level: int, velocity: np.ndarray) -> np.ndarray:
    """Return d/dt of the coordinates for the right trivialized velocity ġg⁻¹.

    Above level 0, (a, X) moves with (ξ a, Ad_{a⁻¹}η) for the velocity (ξ, η).
    """
    if level == 0:
        return _flat_of(realize_values(velocity) @ _matrix_of(values))
    cut = flat_size(level - 1)
    half = velocity.size // 2
    base = values[:cut]
    fiber_rate = flat_adjoint(base, level - 1, velocity[half:], inverse=True)
    return np.concatenate([flat_right_tangent(base, level - 1, velocity[:half]), fiber_rate])


def flat_reproject(values: np.ndarray, level: int, side: Side | None) -> np.ndarray:
    """Return the coordinates of the nearest element of SL(2,C), SU(2), B or their lifts.

    SU(2) uses the unitary polar factor and B the diagonal phase
    normalization; lifted fibers are projected onto the side.
    """
    if level > 0:
        cut = flat_size(level - 1)
        fiber = values[cut:]
        if side is not None:
            fiber = fiber * tower_level(level - 1).split.mask(side)
        return np.concatenate([flat_reproject(values[:cut], level - 1, side), fiber])
    matrix = _matrix_of(values)
    if side == "minus":
        diagonal = abs(matrix[0, 0].real)
        return _flat_of(np.array([[diagonal, matrix[0, 1]], [0.0, 1.0 / diagonal]]))
    if side == "plus":
        left, _, right = np.linalg.svd(matrix)
        matrix = left @ right
    return _flat_of(matrix / np.sqrt(_determinant(matrix)))


def group_log_velocity(
    curve: Callable[[float], AnyGroupElement], t: float = 0.0, step: float = 1e-6
) -> AlgebraElement:
    """Return the left trivialized velocity of a curve by central differences."""
    forward = flatten(curve(t + step))
    backward = flatten(curve(t - step))
    return flat_to_velocity(curve(t), (forward - backward) / (2.0 * step))


def dressing_velocity(h_plus: AnyGroupElement, x_minus: AlgebraElement, step: float = 1e-6) -> AlgebraElement:
    """Return h₊⁻¹ d/dt plus_factor(Exp(tX₋)h₊) by differentiating the factorization."""

    def curve(t: float) -> AnyGroupElement:
        return factorize(group_mul(group_exp(x_minus * t), h_plus))[0]

    return group_log_velocity(curve, 0.0, step)


def dressing_relation_residual(h_plus: AnyGroupElement, x_minus: AlgebraElement) -> float:
    """Return the defect of Ad_{h₊⁻¹}X₋ = h₊⁻¹h₊^{X₋} + γ⁻¹(Ad*_{h₊}γ(X₋)).

    The dressing vector is taken from the factorization, the dual term from
    the generic coadjoint action restricted to the plus subalgebra.
    """
    model = tower_level(h_plus.level)
    require_side(model.split, x_minus, "minus", "x_minus")
    moved = adjoint(group_inverse(h_plus), x_minus)
    dressing = dressing_velocity(h_plus, x_minus)
    dual = model.project_dual(coadjoint(h_plus, model.gamma(x_minus)), "plus")
    residual = moved - dressing - model.gamma_inverse(dual)
    value = residual.norm()
    if value > MEMBERSHIP_TOLERANCE:
        _LOGGER.debug("Dressing relation residual %s at level %s", value, h_plus.level)
    return value
