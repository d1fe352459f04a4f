"""Poisson structures on H × h, its fibers and the plus group.

A phase point (h, Z) is stored as a SemidirectGroupElement whose base is the
configuration group element h and whose fiber is Z.  Differentials are pairs
(α, δ) where α is the group slot in left trivialized form,
<dF, v> = <α, h⁻¹v>, and δ is the derivative along the algebra slot.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass

import numpy as np

from .const import (
    DIFFERENTIAL_TOLERANCE,
    FD_STEP,
    FIBER_TOLERANCE,
    MEMBERSHIP_TOLERANCE,
)
from .exceptions import (
    DifferentialMismatch,
    GroupInvariantViolation,
    LevelMismatch,
    OffFiberError,
)
from .lie_core import (
    AlgebraElement,
    AlgebraModel,
    CoalgebraElement,
    bracket,
    is_character,
    pairing,
    require_side,
)
from .matrix_group import (
    AnyGroupElement,
    GroupElement,
    SemidirectGroupElement,
    adjoint,
    coadjoint,
    factorize,
    flat_size,
    flat_to_velocity,
    flatten,
    group_exp,
    group_inverse,
    group_mul,
    identity,
    projector_A,
    reproject,
    tangent_flat,
)
from .sl2c_model import build_model, su2_vector, tower_level
from .utils import central_difference

_LOGGER = logging.getLogger(__name__)

PhasePoint = SemidirectGroupElement


def phase_point(h: AnyGroupElement, z: AlgebraElement) -> PhasePoint:
    """Return the phase point (h, Z)."""
    return SemidirectGroupElement(h, z)


def _model(point: PhasePoint) -> AlgebraModel:
    return tower_level(point.base.level)


@dataclass(frozen=True, eq=False)
class Differential:
    """Left trivialized group slot and algebra slot of dF."""

    group: CoalgebraElement
    algebra: CoalgebraElement


@dataclass(frozen=True, eq=False)
class Tangent:
    """Tangent vector: left trivialized group velocity h⁻¹ḣ and Ż."""

    group: AlgebraElement
    fiber: AlgebraElement

    def __add__(self, other: Tangent) -> Tangent:
        return Tangent(self.group + other.group, self.fiber + other.fiber)

    def __sub__(self, other: Tangent) -> Tangent:
        return Tangent(self.group - other.group, self.fiber - other.fiber)

    def __mul__(self, scalar: float) -> Tangent:
        return Tangent(self.group * scalar, self.fiber * scalar)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.hypot(self.group.norm(), self.fiber.norm()))

    @classmethod
    def from_flat(cls, point: PhasePoint, derivative: np.ndarray) -> Tangent:
        cut = flat_size(point.base.level)
        model = _model(point)
        return cls(flat_to_velocity(point.base, derivative[:cut]), model.element(derivative[cut:]))

    def to_flat(self, point: PhasePoint) -> np.ndarray:
        """Return the derivative of the flat coordinates of point, inverse of from_flat."""
        return np.concatenate([tangent_flat(point.base, self.group), self.fiber.coefficients])

    @classmethod
    def zero(cls, model: AlgebraModel) -> Tangent:
        return cls(model.zero(), model.zero())


@dataclass(frozen=True, eq=False)
class Observable:
    """A function on H × h with an optional exact differential."""

    evaluate: Callable[[AnyGroupElement, AlgebraElement], float]
    differential: Callable[[AnyGroupElement, AlgebraElement], Differential] | None = None
    left_invariant: bool = False
    name: str = ""

    def __call__(self, point: PhasePoint) -> float:
        return float(self.evaluate(point.base, point.fiber))


@dataclass(frozen=True, eq=False)
class FiberBasePoint:
    """Base point (h₋, Z₋) of the fiber {(h₊h₋, Z₊ + Z₋)}."""

    h_minus: AnyGroupElement
    z_minus: AlgebraElement

    def __post_init__(self) -> None:
        if self.h_minus.side != "minus":
            raise GroupInvariantViolation("fiber base needs an element of the minus group")
        if self.z_minus.descriptor.level != self.h_minus.level:
            raise LevelMismatch("fiber base slots have different levels")
        require_side(self.model.split, self.z_minus, "minus", "z_minus")
        if not self.character_condition():
            _LOGGER.warning("σ(Z₋) is not a character of the minus subalgebra; the fiber dynamics are not collective")

    @property
    def level(self) -> int:
        return self.h_minus.level

    @property
    def model(self) -> AlgebraModel:
        return tower_level(self.h_minus.level)

    @classmethod
    def identity(cls, level: int = 0) -> FiberBasePoint:
        return cls(identity(level, "minus"), tower_level(level).zero())

    def character_condition(self) -> bool:
        """Return True when σ(Z₋) restricted to the minus subalgebra is a character."""
        model = self.model
        restricted = model.project_dual(model.sigma(self.z_minus), "minus")
        return is_character(restricted, model.split.minus_basis_indices)

    def point(self, h_plus: AnyGroupElement, z_plus: AlgebraElement) -> PhasePoint:
        """Return (h₊h₋, Z₊ + Z₋)."""
        require_side(self.model.split, z_plus, "plus", "z_plus")
        return phase_point(group_mul(h_plus, self.h_minus), z_plus + self.z_minus)

    def fiber_coordinates(self, point: PhasePoint) -> tuple[AnyGroupElement, AlgebraElement]:
        """Return (h₊, Z₊) of a point on this fiber."""
        require_on_fiber(point, self)
        h_plus = group_mul(point.base, group_inverse(self.h_minus))
        return reproject(h_plus, "plus"), self.model.project(point.fiber, "plus")


def fiber_projection(point: PhasePoint) -> FiberBasePoint:
    """Return Ψ(h, Z) = (h₋, Π₋Z)."""
    _, h_minus = factorize(point.base)
    return FiberBasePoint(h_minus, _model(point).project(point.fiber, "minus"))


def fiber_distance(point: PhasePoint, base: FiberBasePoint) -> float:
    if point.base.level != base.level:
        raise LevelMismatch(f"point of level {point.base.level} against a fiber of level {base.level}")
    _, h_minus = factorize(point.base)
    group = float(np.max(np.abs(flatten(h_minus) - flatten(base.h_minus))))
    algebra = _model(point).project(point.fiber, "minus").distance(base.z_minus)
    return max(group, algebra)


def require_on_fiber(point: PhasePoint, base: FiberBasePoint, tolerance: float = FIBER_TOLERANCE) -> None:
    """Raise OffFiberError when Ψ(point) differs from the base point."""
    distance = fiber_distance(point, base)
    if distance > tolerance * max(1.0, float(np.max(np.abs(flatten(point.base))))):
        raise OffFiberError(f"point is {distance:.3e} away from the requested fiber")


def _group_basis_moves(point: PhasePoint, directions: Iterable[AlgebraElement], step: float, observable: Observable):
    values = []
    for direction in directions:
        forward = group_mul(point.base, group_exp(direction * step))
        backward = group_mul(point.base, group_exp(direction * -step))
        values.append(
            (observable.evaluate(forward, point.fiber) - observable.evaluate(backward, point.fiber)) / (2.0 * step)
        )
    return np.array(values)


def _algebra_moves(point: PhasePoint, indices: Iterable[int], step: float, observable: Observable):
    model = _model(point)
    values = np.zeros(model.dim)
    for index in indices:
        offset = np.zeros(model.dim)
        offset[index] = step
        forward = observable.evaluate(point.base, point.fiber + model.element(offset))
        backward = observable.evaluate(point.base, point.fiber - model.element(offset))
        values[index] = (forward - backward) / (2.0 * step)
    return values


def finite_difference_differential(
    observable: Observable,
    point: PhasePoint,
    base: FiberBasePoint | None = None,
    step: float = FD_STEP,
) -> Differential:
    """Return (α, δ) by central differences.

    With a base point only moves along the fiber are used: the group slot is
    moved along Ad_{h₋⁻¹}h₊ and the algebra slot along h₊, which is all the
    Dirac bracket reads.
    """
    model = _model(point)
    if base is None:
        basis = [AlgebraElement.basis(model.descriptor, i) for i in range(model.dim)]
        alpha = _group_basis_moves(point, basis, step, observable)
        delta = _algebra_moves(point, range(model.dim), step, observable)
        return Differential(model.coelement(alpha), model.coelement(delta))
    plus = model.split.plus_basis_indices
    h_minus_inverse = group_inverse(base.h_minus)
    directions = [adjoint(h_minus_inverse, AlgebraElement.basis(model.descriptor, i)) for i in plus]
    moves = _group_basis_moves(point, directions, step, observable)
    padded = np.zeros(model.dim)
    padded[list(plus)] = moves
    # <α, Ad_{h₋⁻¹}e_i> = padded_i on the plus indices
    alpha = coadjoint(base.h_minus, model.coelement(padded))
    delta = _algebra_moves(point, plus, step, observable)
    return Differential(alpha, model.coelement(delta))


def differential_of(observable: Observable, point: PhasePoint, base: FiberBasePoint | None = None) -> Differential:
    if observable.differential is not None:
        return observable.differential(point.base, point.fiber)
    return finite_difference_differential(observable, point, base)


def register_observable(
    observable: Observable,
    points: Iterable[PhasePoint],
    tolerance: float = DIFFERENTIAL_TOLERANCE,
) -> Observable:
    """Check an exact differential against finite differences and return the observable."""
    if observable.differential is None:
        return observable
    for point in points:
        exact = observable.differential(point.base, point.fiber)
        approx = finite_difference_differential(observable, point)
        error = max(exact.group.distance(approx.group), exact.algebra.distance(approx.algebra))
        scale = max(
            1.0,
            float(np.max(np.abs(exact.group.coefficients))),
            float(np.max(np.abs(exact.algebra.coefficients))),
        )
        if error > tolerance * scale:
            raise DifferentialMismatch(
                f"differential of {observable.name or 'observable'} is off by {error:.3e}"
            )
    _LOGGER.debug("Registered observable %s", observable.name)
    return observable


def linear_observable(a: AlgebraElement) -> Observable:
    """Return F(h, Z) = <σZ, a>."""
    model = tower_level(a.descriptor.level)

    def evaluate(h, z):
        return model.sigma_pair(z, a)

    def differential(h, z):
        return Differential(model.coelement(np.zeros(model.dim)), model.sigma(a))

    return Observable(evaluate, differential, left_invariant=True, name="linear")


def momentum_function(x: AlgebraElement) -> Observable:
    """Return φ_X(h, Z) = (Z, Ad_{h⁻¹}X) with its exact differential."""
    model = tower_level(x.descriptor.level)

    def evaluate(h, z):
        return model.sigma_pair(z, adjoint(group_inverse(h), x))

    def differential(h, z):
        moved = adjoint(group_inverse(h), x)
        alpha = model.gamma(bracket(model.gamma_inverse(model.sigma(z)), moved))
        return Differential(alpha, model.sigma(moved))

    return Observable(evaluate, differential, name="momentum")


def trace_observable(matrix: np.ndarray) -> Observable:
    """Return F(h, Z) = Re tr(M h) on the SL(2,C) configuration space."""
    matrix = np.asarray(matrix, dtype=complex)
    model = build_model()

    def evaluate(h, z):
        if not isinstance(h, GroupElement):
            raise LevelMismatch("trace observables live on level 0")
        return float(np.trace(matrix @ h.matrix).real)

    def differential(h, z):
        alpha = [np.trace(matrix @ h.matrix @ basis).real for basis in model.basis_matrices]
        return Differential(CoalgebraElement(model.descriptor, alpha), CoalgebraElement(model.descriptor, np.zeros(6)))

    return Observable(evaluate, differential, name="trace")


def combine(*observables: Observable, weights: Iterable[float] | None = None) -> Observable:
    """Return a linear combination of observables."""
    weights = list(weights) if weights is not None else [1.0] * len(observables)

    def evaluate(h, z):
        return sum(w * obs.evaluate(h, z) for w, obs in zip(weights, observables))

    exact = all(obs.differential is not None for obs in observables)

    def differential(h, z):
        parts = [obs.differential(h, z) for obs in observables]
        group = sum((p.group * w for w, p in zip(weights, parts)), parts[0].group * 0.0)
        algebra = sum((p.algebra * w for w, p in zip(weights, parts)), parts[0].algebra * 0.0)
        return Differential(group, algebra)

    return Observable(
        evaluate,
        differential if exact else None,
        left_invariant=all(obs.left_invariant for obs in observables),
        name="+".join(obs.name for obs in observables),
    )


def _three_terms(model: AlgebraModel, z: AlgebraElement, alpha_f, alpha_g, u_f, u_g) -> float:
    return pairing(alpha_f, u_g) - pairing(alpha_g, u_f) - pairing(model.sigma(z), bracket(u_f, u_g))


def canonical_poisson(f: Observable, g: Observable, point: PhasePoint) -> float:
    """Return {F, G} = <α_F, u_G> − <α_G, u_F> − <σZ, [u_F, u_G]> with u = σ⁻¹δ."""
    model = _model(point)
    df = differential_of(f, point)
    dg = differential_of(g, point)
    u_f = model.sigma_inverse(df.algebra)
    u_g = model.sigma_inverse(dg.algebra)
    return _three_terms(model, point.fiber, df.group, dg.group, u_f, u_g)


def dirac_bracket(f: Observable, g: Observable, point: PhasePoint, base: FiberBasePoint) -> float:
    """Return the Dirac bracket on the fiber through point, with 𝔸₊(h₋)σ⁻¹δ."""
    require_on_fiber(point, base)
    model = _model(point)
    df = differential_of(f, point, base)
    dg = differential_of(g, point, base)
    u_f = projector_A(base.h_minus, "plus", model.sigma_inverse(df.algebra))
    u_g = projector_A(base.h_minus, "plus", model.sigma_inverse(dg.algebra))
    alpha_f = df.group
    alpha_g = dg.group
    if f.left_invariant and g.left_invariant:
        alpha_f = alpha_g = model.coelement(np.zeros(model.dim))
    return _three_terms(model, point.fiber, alpha_f, alpha_g, u_f, u_g)


def lie_poisson(f: Observable, g: Observable, point: PhasePoint) -> float:
    """Return −(Z₊, [Π₊σ⁻¹δF, Π₊σ⁻¹δG]) on the plus algebra."""
    model = _model(point)
    u_f = model.project(model.sigma_inverse(differential_of(f, point).algebra), "plus")
    u_g = model.project(model.sigma_inverse(differential_of(g, point).algebra), "plus")
    return -model.sigma_pair(model.project(point.fiber, "plus"), bracket(u_f, u_g))


def bracket_observable(f: Observable, g: Observable, base: FiberBasePoint) -> Observable:
    """Return the function {F, G} on the fiber over base.

    It carries no exact differential, so brackets with it take finite
    differences along the fiber.
    """

    def evaluate(h, z):
        return dirac_bracket(f, g, phase_point(h, z), base)

    return Observable(
        evaluate,
        left_invariant=f.left_invariant and g.left_invariant,
        name=f"{{{f.name},{g.name}}}",
    )


def jacobi_defect(f: Observable, g: Observable, k: Observable, point: PhasePoint, base: FiberBasePoint) -> float:
    """Return |{{F, G}, K} + {{G, K}, F} + {{K, F}, G}| for the Dirac bracket."""
    total = 0.0
    for first, second, third in ((f, g, k), (g, k, f), (k, f, g)):
        total += dirac_bracket(bracket_observable(first, second, base), third, point, base)
    return abs(total)


def b_parameters(h_minus: GroupElement) -> tuple[float, float, float]:
    """Return (a, b, c) of h₋ = [[a, b+ic], [0, 1/a]]."""
    a = float(h_minus.matrix[0, 0].real)
    if a <= 0:
        raise GroupInvariantViolation("B element needs a positive diagonal")
    corner = complex(h_minus.matrix[0, 1])
    return a, corner.real, corner.imag


def monopole_density(h_minus: GroupElement) -> float:
    """Return ρ_m = −(b²/a² + c²/a² + 1/a⁴ − 1)."""
    a, b, c = b_parameters(h_minus)
    return -(b * b / a**2 + c * c / a**2 + 1.0 / a**4 - 1.0)


def monopole_density_trace(h_minus: GroupElement) -> float:
    """Return (1/a²) tr(h₋ H h₋†)."""
    a, _, _ = b_parameters(h_minus)
    h = h_minus.matrix
    return float(np.trace(h @ np.diag([1.0, -1.0]) @ h.conj().T).real) / a**2


def magnetic_jacobian(h_minus: GroupElement) -> np.ndarray:
    """Return ∂ℬ/∂z; ℬ is linear in z."""
    a, b, c = b_parameters(h_minus)
    return np.array(
        [
            [0.0, 0.0, b / a],
            [0.0, 0.0, -c / a],
            [b / a, -c / a, monopole_density(h_minus)],
        ]
    )


def magnetic_field(h_minus: GroupElement, z_plus: AlgebraElement) -> np.ndarray:
    """Return ℬ(h₋, z) in su(2) coordinates."""
    return magnetic_jacobian(h_minus) @ su2_vector(z_plus)


def dirac_bracket_sl2c(f: Observable, g: Observable, point: PhasePoint, base: FiberBasePoint) -> float:
    """Return −16 ε_ijk (δF)_i (δG)_j (z_k − ℬ_k) for left invariant F, G and Z₋ = 0."""
    if base.level != 0:
        raise LevelMismatch("the monopole form of the bracket lives on SL(2,C) × sl(2,C)")
    if base.z_minus.norm() > MEMBERSHIP_TOLERANCE:
        raise OffFiberError("the monopole form needs Z₋ = 0")
    _, z_plus = base.fiber_coordinates(point)
    df = su2_vector(differential_of(f, point, base).algebra)
    dg = su2_vector(differential_of(g, point, base).algebra)
    shifted = su2_vector(z_plus) - magnetic_field(base.h_minus, z_plus)
    return float(-16.0 * np.dot(np.cross(df, dg), shifted))


def symplectic_form(point: PhasePoint, v: Tangent, w: Tangent) -> float:
    """Return ω(v, w) = <σw_Z, v_h> − <σv_Z, w_h> + <σZ, [v_h, w_h]>."""
    model = _model(point)
    return (
        model.sigma_pair(w.fiber, v.group)
        - model.sigma_pair(v.fiber, w.group)
        + model.sigma_pair(point.fiber, bracket(v.group, w.group))
    )


def symplectic_form_plus(point: PhasePoint, v: Tangent, w: Tangent) -> float:
    """Return ω on H⁺ × h⁺."""
    split = _model(point).split
    for tangent in (v, w):
        require_side(split, tangent.group, "plus", "group velocity")
        require_side(split, tangent.fiber, "plus", "fiber velocity")
    require_side(split, point.fiber, "plus", "fiber")
    return symplectic_form(point, v, w)


def dressing_flow_defect(point: PhasePoint, w_minus: AlgebraElement, v: Tangent, w: Tangent) -> float:
    """Return dβ(v, w) for β = i_V ω with V the dressing field of (0, W₋).

    With B = Ad_{h⁻¹}W₋ and the σ pairing (·,·) this is
    (Π₊[ξ₁,B], ξ₂) − (Π₊[ξ₂,B], ξ₁) + (Π₊B, [ξ₁,ξ₂]).
    """
    model = _model(point)
    moved = adjoint(group_inverse(point.base), w_minus)
    xi1, xi2 = v.group, w.group
    return (
        model.sigma_pair(model.project(bracket(xi1, moved), "plus"), xi2)
        - model.sigma_pair(model.project(bracket(xi2, moved), "plus"), xi1)
        + model.sigma_pair(model.project(moved, "plus"), bracket(xi1, xi2))
    )


def dressing_hamiltonian(x_minus: AlgebraElement) -> Observable:
    """Return θ_{X₋}(h₊, Z₊) = (Z₊, Π₊Ad_{h₊⁻¹}X₋)."""
    model = tower_level(x_minus.descriptor.level)

    def evaluate(h, z):
        return model.sigma_pair(z, model.project(adjoint(group_inverse(h), x_minus), "plus"))

    def differential(h, z):
        moved = adjoint(group_inverse(h), x_minus)
        # d/ds at h e^{sξ} of Π₊Ad_{h⁻¹}X₋ is −Π₊[ξ, M]
        alpha = model.coelement(
            [
                -model.sigma_pair(z, model.project(bracket(AlgebraElement.basis(model.descriptor, i), moved), "plus"))
                for i in range(model.dim)
            ]
        )
        return Differential(alpha, model.sigma(model.project(moved, "plus")))

    return Observable(evaluate, differential, name="dressing")


def dressing_hamiltonian_defect(point: PhasePoint, x_minus: AlgebraElement) -> float:
    """Return max |dθ_{X₋}(W) − ω(V, W)| over basis tangents on H⁺ × h⁺."""
    model = _model(point)
    field = dressing_vector(AlgebraElement.from_halves(x_minus, model.zero()), point)
    theta = dressing_hamiltonian(x_minus).differential(point.base, point.fiber)
    worst = 0.0
    for index in model.split.plus_basis_indices:
        unit = AlgebraElement.basis(model.descriptor, index)
        for tangent in (Tangent(unit, model.zero()), Tangent(model.zero(), unit)):
            lhs = pairing(theta.group, tangent.group) + pairing(theta.algebra, tangent.fiber)
            worst = max(worst, abs(lhs - symplectic_form(point, field, tangent)))
    return worst


def momentum_bracket_defect(x: AlgebraElement, y: AlgebraElement, point: PhasePoint, base: FiberBasePoint) -> float:
    """Return −(Z, [Ad_{h₋⁻¹}Π₋Ad_{h₊⁻¹}X, Ad_{h₋⁻¹}Π₋Ad_{h₊⁻¹}Y])."""
    model = _model(point)
    h_plus, _ = base.fiber_coordinates(point)
    plus_inverse = group_inverse(h_plus)
    minus_inverse = group_inverse(base.h_minus)

    def twisted(element: AlgebraElement) -> AlgebraElement:
        return adjoint(minus_inverse, model.project(adjoint(plus_inverse, element), "minus"))

    return -model.sigma_pair(point.fiber, bracket(twisted(x), twisted(y)))


def _require_semidirect_side(point: PhasePoint, side: str) -> None:
    if not isinstance(point, SemidirectGroupElement) or point.side != side:
        raise GroupInvariantViolation(f"point must lie in the {side} semidirect group")


def pl_bivector_base(h: AnyGroupElement, xi: CoalgebraElement, eta: CoalgebraElement) -> float:
    """Return k(Π₋Ad_{h⁻¹}γ⁻¹ξ, Π₊Ad_{h⁻¹}γ⁻¹η) for h in the plus group."""
    model = tower_level(h.level)
    x = model.gamma_inverse(xi)
    y = model.gamma_inverse(eta)
    require_side(model.split, x, "minus", "γ⁻¹ξ")
    require_side(model.split, y, "minus", "γ⁻¹η")
    inverse = group_inverse(h)
    return model.k(model.project(adjoint(inverse, x), "minus"), model.project(adjoint(inverse, y), "plus"))


def pl_bivector(point: SemidirectGroupElement, xi: CoalgebraElement, eta: CoalgebraElement) -> float:
    """Return the Poisson-Lie bivector of the plus semidirect group at point."""
    _require_semidirect_side(point, "plus")
    return pl_bivector_base(point, xi, eta)


def pl_bivector_blocks(point: SemidirectGroupElement, xi: CoalgebraElement, eta: CoalgebraElement) -> float:
    """Return the same bivector from its block expansion over the level below.

    With γ⁻¹ξ = (X, V), γ⁻¹η = (Y, W), ρ(Y) = Ad_hΠ₊Ad_{h⁻¹}Y and ζ = Ad_hZ:
    f[π(X, W) + π(V, Y) + k(Y, [ρX, ζ]) − k(X, [ρY, ζ]) + k([X, Y], ζ)].
    """
    _require_semidirect_side(point, "plus")
    upper = tower_level(point.level)
    lower = tower_level(point.base.level)
    first_x, second_x = upper.gamma_inverse(xi).halves()
    first_y, second_y = upper.gamma_inverse(eta).halves()
    h = point.base
    inverse = group_inverse(h)
    zeta = adjoint(h, point.fiber)

    def rho(element: AlgebraElement) -> AlgebraElement:
        return adjoint(h, lower.project(adjoint(inverse, element), "plus"))

    def pi(left: AlgebraElement, right: AlgebraElement) -> float:
        return lower.k(lower.project(adjoint(inverse, left), "minus"), lower.project(adjoint(inverse, right), "plus"))

    factor = 0.5 if upper.form.half_factor else 1.0
    return factor * (
        pi(first_x, second_y)
        + pi(second_x, first_y)
        + lower.k(first_y, bracket(rho(first_x), zeta))
        - lower.k(first_x, bracket(rho(first_y), zeta))
        + lower.k(bracket(first_x, first_y), zeta)
    )


def dressing_vector(xi_minus: AlgebraElement, point: SemidirectGroupElement) -> Tangent:
    """Return the dressing field of ξ = (Y₋, W₋) at (h₊, Z₊).

    h⁻¹ḣ = Π₊Ad_{h⁻¹}Y₋ and Ż = Π₊(Ad_{h⁻¹}W₋ + [Π₋Ad_{h⁻¹}Y₋, Z₊]).
    """
    model = _model(point)
    first, second = xi_minus.halves()
    require_side(model.split, first, "minus", "Y₋")
    require_side(model.split, second, "minus", "W₋")
    inverse = group_inverse(point.base)
    moved = adjoint(inverse, first)
    group = model.project(moved, "plus")
    fiber = model.project(adjoint(inverse, second) + bracket(model.project(moved, "minus"), point.fiber), "plus")
    return Tangent(group, fiber)


def reciprocal_dressing(xi_plus: AlgebraElement, point: SemidirectGroupElement) -> Tangent:
    """Return the right dressing field of ξ = (X₊, Y₊) at (h₋, Z₋).

    h⁻¹ḣ = 𝔸₋(h₋)X₊ and Ż = 𝔸₋(h₋)(Y₊ − [X₊, Z₋]).
    """
    model = _model(point)
    first, second = xi_plus.halves()
    require_side(model.split, first, "plus", "X₊")
    require_side(model.split, second, "plus", "Y₊")
    group = projector_A(point.base, "minus", first)
    fiber = projector_A(point.base, "minus", second - bracket(first, point.fiber))
    return Tangent(group, fiber)


def dress(point: SemidirectGroupElement, xi_minus: AlgebraElement, t: float) -> SemidirectGroupElement:
    """Return the plus factor of Exp(tξ)•point."""
    return factorize(group_mul(group_exp(xi_minus * t), point))[0]


def reciprocal_dress(point: SemidirectGroupElement, xi_plus: AlgebraElement, t: float) -> SemidirectGroupElement:
    """Return the minus factor of point•Exp(tξ)."""
    return factorize(group_mul(point, group_exp(xi_plus * t)))[1]


def tangent_of_curve(curve: Callable[[float], PhasePoint], step: float = FD_STEP) -> Tangent:
    """Return the tangent at t = 0 of a curve of phase points."""
    derivative = central_difference(lambda s: flatten(curve(s)), step)
    return Tangent.from_flat(curve(0.0), derivative)


def dressing_vector_by_factorization(
    xi_minus: AlgebraElement, point: SemidirectGroupElement, step: float = FD_STEP
) -> Tangent:
    return tangent_of_curve(lambda t: dress(point, xi_minus, t), step)


def reciprocal_dressing_by_factorization(
    xi_plus: AlgebraElement, point: SemidirectGroupElement, step: float = FD_STEP
) -> Tangent:
    return tangent_of_curve(lambda t: reciprocal_dress(point, xi_plus, t), step)


def dressing_antihomomorphism_defect(
    xi: AlgebraElement, xi2: AlgebraElement, point: SemidirectGroupElement, step: float = 1e-5
) -> float:
    """Return the defect of the bracket relation of the dressing fields.

    On the plus group the minus group dresses from the left and the fields
    reverse brackets, [X_ξ, X_ξ′] = −X_{[ξ, ξ′]}; on the minus group the plus
    group dresses from the right and [X_ξ, X_ξ′] = X_{[ξ, ξ′]}.  The field
    bracket is taken in flat coordinates, each field differentiated along the
    flow of the other.
    """
    if point.side == "plus":
        field, flow, sign = dressing_vector, dress, -1.0
    elif point.side == "minus":
        field, flow, sign = reciprocal_dressing, reciprocal_dress, 1.0
    else:
        raise GroupInvariantViolation("dressing acts on the plus or the minus group")

    def along(direction: AlgebraElement, target: AlgebraElement) -> np.ndarray:
        def sample(s: float) -> np.ndarray:
            moved = flow(point, direction, s)
            return field(target, moved).to_flat(moved)

        return central_difference(sample, step)

    commutator = Tangent.from_flat(point, along(xi, xi2) - along(xi2, xi))
    return (commutator - field(bracket(xi, xi2), point) * sign).norm()


def phi_b(point: PhasePoint) -> CoalgebraElement:
    """Return Φ_B(h, Z) = γ(Ad_h γ⁻¹σZ)."""
    model = _model(point)
    return model.gamma(adjoint(point.base, model.gamma_inverse(model.sigma(point.fiber))))


def phi_x(point: PhasePoint, x: AlgebraElement) -> float:
    """Return the momentum function φ_X(h, Z) = (Z, Ad_{h⁻¹}X)."""
    return momentum_function(x)(point)


def theta_momentum(point: PhasePoint) -> CoalgebraElement:
    """Return Θ(h₊, Z₊) = γ(Π₊Ad_{h₊⁻¹}γ⁻¹σZ₊), which pairs to zero with the plus algebra."""
    model = _model(point)
    moved = adjoint(group_inverse(point.base), model.gamma_inverse(model.sigma(point.fiber)))
    return model.gamma(model.project(moved, "plus"))
