"""Equations of motion on the fibers and their numerical integration.

States live on a fiber {(h₊h₋, Z₊ + Z₋)} with a fixed base point (h₋, Z₋).
They are written either in (h₊, Z) coordinates or in the twisted variables
Ω = Ad_{h₋}ℒ(σZ), Γ = Ad_{h₋}γ⁻¹σZ.  Every flow can carry an auxiliary
minus frame g₋ with ġ₋g₋⁻¹ = Ω₋, which is what makes the generator
Θ = ℒ(γ(Ad_{g₋⁻¹}Γ)) measurable along numerical trajectories.
"""

from __future__ import annotations

import functools
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .brackets import (
    Differential,
    FiberBasePoint,
    Observable,
    PhasePoint,
    Tangent,
    differential_of,
    fiber_distance,
    phase_point,
    phi_b,
    require_on_fiber,
)
from .const import (
    EQUIVARIANCE_TOLERANCE,
    FD_STEP,
    HAMILTONIAN_KINDS,
    MEMBERSHIP_TOLERANCE,
)
from .exceptions import (
    GroupInvariantViolation,
    InitialDataError,
    IntegrationAborted,
    LevelMismatch,
    NonCollectiveHamiltonian,
    SubalgebraMembershipError,
)
from .lie_core import (
    AlgebraElement,
    AlgebraModel,
    CoalgebraElement,
    ad_star,
    bracket,
    dressing_component,
    is_character,
    structure_bracket,
)
from .matrix_group import (
    AnyGroupElement,
    adjoint,
    adjoint_operator,
    coadjoint,
    flat_reproject,
    flat_right_tangent,
    flat_size,
    flat_tangent,
    flatten,
    group_inverse,
    group_mul,
    identity,
    projector_A,
    random_element,
    unflatten,
)
from .sl2c_model import build_model, tower_level
from .utils import finite_result

_LOGGER = logging.getLogger(__name__)

Form = Literal["form0", "form1", "form2"]
FORMS = ("form0", "form1", "form2")

# Classical fourth order Runge-Kutta, extended Butcher table in the layout
# BT[stage] = weights of the slopes computed so far.
RK4_EVAL_STAGES = [0.0, 0.5, 0.5, 1.0]
RK4_BT = {
    0: [0.5],
    1: [0.0, 0.5],
    2: [0.0, 0.0, 1.0],
    3: [1 / 6, 1 / 3, 1 / 3, 1 / 6],
}


# Hamiltonians ==========================================================================


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """A function 𝗁 on the dual of the level algebra with its Legendre transform."""

    kind: str
    level: int
    legendre: Callable[[CoalgebraElement], AlgebraElement]
    energy: Callable[[CoalgebraElement], float]
    name: str = ""
    legendre_matrix: np.ndarray | None = None

    @property
    def model(self) -> AlgebraModel:
        return tower_level(self.level)

    @property
    def collective(self) -> bool:
        return self.kind in HAMILTONIAN_KINDS

    def omega(self, gamma: AlgebraElement) -> AlgebraElement:
        """Return Ω = ℒ(γ(Γ))."""
        return self.legendre(self.model.gamma(gamma))

    def legendre_values(self, eta: np.ndarray) -> np.ndarray:
        """Return ℒ on raw dual coefficients, through legendre_matrix when ℒ is linear."""
        if self.legendre_matrix is not None:
            return self.legendre_matrix @ eta
        return self.legendre(self.model.coelement(eta)).coefficients

    def observable(self) -> Observable:
        return collective_observable(self)


def quadratic_km(level: int) -> HamiltonianSpec:
    """Return 𝗁(η) = ½k(γ⁻¹η, γ⁻¹η), whose Legendre transform is γ⁻¹."""
    model = tower_level(level)

    def energy(eta: CoalgebraElement) -> float:
        x = model.gamma_inverse(eta)
        return 0.5 * model.k(x, x)

    return HamiltonianSpec(
        "quadratic_km",
        level,
        model.gamma_inverse,
        energy,
        name="quadratic_km",
        legendre_matrix=np.linalg.inv(model.form.matrix),
    )


def sl2c_h2(level: int = 1) -> HamiltonianSpec:
    """Return 𝗁(η) = −(1/16) Re κ(X₀, Y₀) with (X₀, Y₀) = γ⁻¹η and ℒ = ½Jγ⁻¹."""
    if level != 1:
        raise LevelMismatch(f"the sl(2,C) hamiltonian lives on the level 1 algebra, not {level}")
    model = tower_level(1)
    base = build_model()

    def legendre(eta: CoalgebraElement) -> AlgebraElement:
        return 0.5 * model.j_multiply(model.gamma_inverse(eta))

    def energy(eta: CoalgebraElement) -> float:
        first, second = model.gamma_inverse(eta).halves()
        return -base.kappa(first, second).real / 16.0

    matrix = 0.5 * model.j_matrix @ np.linalg.inv(model.form.matrix)
    return HamiltonianSpec("sl2c_h2", 1, legendre, energy, name="sl2c_h2", legendre_matrix=matrix)


def zero_hamiltonian(level: int) -> HamiltonianSpec:
    model = tower_level(level)
    return HamiltonianSpec(
        "collective_adinvariant",
        level,
        lambda eta: model.zero(),
        lambda eta: 0.0,
        name="zero",
        legendre_matrix=np.zeros((model.dim, model.dim)),
    )


def hamiltonian_by_name(name: str, level: int) -> HamiltonianSpec:
    """Return one of the shipped hamiltonians on the given algebra level."""
    if name == "quadratic_km":
        return quadratic_km(level)
    if name == "sl2c_h2":
        return sl2c_h2(level)
    if name == "zero":
        return zero_hamiltonian(level)
    raise NonCollectiveHamiltonian(f"unknown hamiltonian {name!r}")


def equivariance_defect(ham: HamiltonianSpec, h: AnyGroupElement, eta: CoalgebraElement) -> float:
    """Return |ℒ(Ad*_h η) − Ad_{h⁻¹}ℒ(η)|."""
    lhs = ham.legendre(coadjoint(h, eta))
    rhs = adjoint(group_inverse(h), ham.legendre(eta))
    return lhs.distance(rhs) / max(1.0, rhs.norm())


def check_equivariance(
    ham: HamiltonianSpec,
    rng: np.random.Generator,
    samples: int = 5,
    tolerance: float = EQUIVARIANCE_TOLERANCE,
) -> HamiltonianSpec:
    """Raise NonCollectiveHamiltonian unless ℒ is equivariant on random samples."""
    model = ham.model
    for _ in range(samples):
        h = random_element(rng, ham.level, scale=0.5)
        eta = model.coelement(rng.uniform(-1.0, 1.0, model.dim))
        defect = equivariance_defect(ham, h, eta)
        if defect > tolerance:
            raise NonCollectiveHamiltonian(
                f"Legendre transform of {ham.name or ham.kind} is not equivariant, defect {defect:.3e}"
            )
    return ham


def legendre_residual(ham: HamiltonianSpec, eta: CoalgebraElement, step: float = FD_STEP) -> float:
    """Return max over basis X of |k(ℒ(η), X) − d/dt 𝗁(η + tγX)|."""
    model = ham.model
    transform = ham.legendre(eta)
    worst = 0.0
    for index in range(model.dim):
        unit = AlgebraElement.basis(model.descriptor, index)
        shift = model.gamma(unit) * step
        derivative = (ham.energy(eta + shift) - ham.energy(eta - shift)) / (2.0 * step)
        worst = max(worst, abs(model.k(transform, unit) - derivative))
    return worst


def collective_observable(ham: HamiltonianSpec) -> Observable:
    """Return H(h, Z) = 𝗁(Φ_B(h, Z)); for Ad-invariant 𝗁, dH = (0, σℒ(σZ))."""
    model = ham.model

    def evaluate(h, z):
        return ham.energy(phi_b(phase_point(h, z)))

    def differential(h, z):
        return Differential(model.coelement(np.zeros(model.dim)), model.sigma(ham.legendre(model.sigma(z))))

    return Observable(evaluate, differential, left_invariant=True, name=ham.name or ham.kind)


def _require_collective(ham: HamiltonianSpec, level: int) -> None:
    if not ham.collective:
        raise NonCollectiveHamiltonian(f"hamiltonian of kind {ham.kind!r} is not collective")
    if ham.level != level:
        raise LevelMismatch(f"hamiltonian of level {ham.level} on a fiber of level {level}")


# Vector fields =========================================================================


def canonical_vector_field(hamiltonian: Observable, point: PhasePoint) -> Tangent:
    """Return V_H of the canonical bracket: (u, σ⁻¹(ad*_u σZ − α)) with u = σ⁻¹δ."""
    model = tower_level(point.base.level)
    dh = differential_of(hamiltonian, point)
    u = model.sigma_inverse(dh.algebra)
    fiber = model.sigma_inverse(ad_star(u, model.sigma(point.fiber)) - dh.group)
    return Tangent(u, fiber)


def _dirac_field(model: AlgebraModel, point: PhasePoint, base: FiberBasePoint, dh: Differential) -> Tangent:
    u_plus = projector_A(base.h_minus, "plus", model.sigma_inverse(dh.algebra))
    moved = model.gamma_inverse(model.sigma(point.fiber))
    inner = bracket(moved, u_plus) - model.gamma_inverse(dh.group)
    fiber = model.sigma_inverse(model.gamma(projector_A(base.h_minus, "minus", inner)))
    return Tangent(u_plus, fiber)


def dirac_vector_field(hamiltonian: Observable, point: PhasePoint, base: FiberBasePoint) -> Tangent:
    """Return the field of the Dirac bracket on the fiber through point.

    h⁻¹ḣ = 𝔸₊u and Ż = σ⁻¹γ𝔸₋([γ⁻¹σZ, 𝔸₊u] − γ⁻¹α) with u = σ⁻¹δ and
    𝔸± = 𝔸±(h₋).
    """
    require_on_fiber(point, base)
    model = base.model
    dh = differential_of(hamiltonian, point, base)
    if hamiltonian.left_invariant:
        dh = Differential(model.coelement(np.zeros(model.dim)), dh.algebra)
    return _dirac_field(model, point, base, dh)


hamiltonian_vector_field = dirac_vector_field


def left_invariant_vector_field(hamiltonian: Observable, point: PhasePoint, base: FiberBasePoint) -> Tangent:
    """Return the Dirac field with the group differential dropped."""
    require_on_fiber(point, base)
    model = base.model
    dh = differential_of(hamiltonian, point, base)
    return _dirac_field(model, point, base, Differential(model.coelement(np.zeros(model.dim)), dh.algebra))


# Phase states ==========================================================================


@dataclass(frozen=True, eq=False)
class PhaseState:
    """A point of a fiber in (h₊, Z) or (h₊, Ω, Γ) coordinates."""

    base: FiberBasePoint
    h_plus: AnyGroupElement
    z: AlgebraElement | None = None
    omega: AlgebraElement | None = None
    gamma: AlgebraElement | None = None
    g_minus: AnyGroupElement | None = None
    time: float = 0.0

    def __post_init__(self) -> None:
        if (self.z is None) == (self.gamma is None):
            raise InitialDataError("a phase state needs either Z or Γ")
        if self.gamma is not None and self.omega is None:
            raise InitialDataError("Γ coordinates need Ω")
        if self.h_plus.side != "plus":
            raise GroupInvariantViolation("h₊ must be tagged as a plus element")
        if self.h_plus.level != self.base.level:
            raise LevelMismatch(f"h₊ of level {self.h_plus.level} over a fiber of level {self.base.level}")
        if self.g_minus is not None and self.g_minus.side != "minus":
            raise GroupInvariantViolation("the frame g₋ must be tagged as a minus element")

    @property
    def coordinates(self) -> str:
        return "hz" if self.z is not None else "omega_gamma"

    @property
    def model(self) -> AlgebraModel:
        return self.base.model

    @property
    def level(self) -> int:
        return self.base.level

    def point(self) -> PhasePoint:
        """Return (h₊h₋, Z)."""
        if self.z is None:
            raise InitialDataError("state is in (Ω, Γ) coordinates")
        return phase_point(group_mul(self.h_plus, self.base.h_minus), self.z)

    def check_omega(self, ham: HamiltonianSpec, tolerance: float = 1e-8) -> float:
        """Return |Ω − ℒ(γΓ)|, raising InitialDataError above tolerance."""
        if self.gamma is None:
            raise InitialDataError("state is in (h₊, Z) coordinates")
        defect = self.omega.distance(ham.omega(self.gamma))
        if defect > tolerance * max(1.0, self.omega.norm()):
            raise InitialDataError(f"Ω is off ℒ(γΓ) by {defect:.3e}")
        return defect


def initial_state(
    base: FiberBasePoint,
    h_plus: AnyGroupElement,
    z_plus: AlgebraElement,
    with_frame: bool = True,
    time: float = 0.0,
) -> PhaseState:
    """Return the (h₊, Z₊ + Z₋) state with the frame g₋ = e."""
    model = base.model
    leak = model.project(z_plus, "minus").norm()
    if leak > MEMBERSHIP_TOLERANCE:
        raise SubalgebraMembershipError(f"Z₊ has a minus component of size {leak:.3e}")
    frame = identity(base.level, "minus") if with_frame else None
    return PhaseState(base, h_plus, z=z_plus + base.z_minus, g_minus=frame, time=time)


def to_omega_gamma(state: PhaseState, ham: HamiltonianSpec) -> PhaseState:
    """Return the state in (Ω, Γ) = (Ad_{h₋}ℒ(σZ), Ad_{h₋}γ⁻¹σZ)."""
    if state.coordinates == "omega_gamma":
        return state
    model = state.model
    eta = model.sigma(state.z)
    omega = adjoint(state.base.h_minus, ham.legendre(eta))
    gamma = adjoint(state.base.h_minus, model.gamma_inverse(eta))
    return replace(state, z=None, omega=omega, gamma=gamma)


def from_omega_gamma(state: PhaseState) -> PhaseState:
    """Return the state in (h₊, Z) with Z = σ⁻¹γ(Ad_{h₋⁻¹}Γ)."""
    if state.coordinates == "hz":
        return state
    model = state.model
    z = model.sigma_inverse(model.gamma(adjoint(group_inverse(state.base.h_minus), state.gamma)))
    return replace(state, z=z, omega=None, gamma=None)


def gamma_character_condition(gamma: AlgebraElement, model: AlgebraModel) -> bool:
    """Return True when γ(Γ₊) restricted to the minus subalgebra is a character."""
    restricted = model.project_dual(model.gamma(model.project(gamma, "plus")), "minus")
    return is_character(restricted, model.split.minus_basis_indices)


# Right hand sides ======================================================================


@dataclass(frozen=True, eq=False)
class StateDerivative:
    """Left velocities of the group slots and rates of the algebra slots."""

    h_plus: AlgebraElement
    z: AlgebraElement | None = None
    gamma: AlgebraElement | None = None
    g_minus: AlgebraElement | None = None


def _split_slot(model: AlgebraModel, x: AlgebraElement, side: str, what: str) -> AlgebraElement:
    other = "minus" if side == "plus" else "plus"
    leak = model.project(x, other).norm()
    if leak > MEMBERSHIP_TOLERANCE * max(1.0, x.norm()):
        raise SubalgebraMembershipError(f"{what} leaves the fiber, {other} component {leak:.3e}")
    return model.project(x, side)


def _frame_velocity(state: PhaseState, omega: AlgebraElement) -> AlgebraElement | None:
    if state.g_minus is None:
        return None
    return adjoint(group_inverse(state.g_minus), state.model.project(omega, "minus"))


def collective_rhs(state: PhaseState, ham: HamiltonianSpec) -> StateDerivative:
    """Return the collective Hamilton equations on the fiber.

    (h₊)⁻¹ḣ₊ = Π₊Ad_{h₋}ℒ(σZ) and Ż = σ⁻¹γ𝔸₋([γ⁻¹σZ, 𝔸₊ℒ(σZ)]); the minus
    components of both vanish.
    """
    if state.coordinates != "hz":
        raise InitialDataError("collective_rhs needs (h₊, Z) coordinates")
    _require_collective(ham, state.level)
    model = state.model
    h_minus = state.base.h_minus
    eta = model.sigma(state.z)
    transform = ham.legendre(eta)
    u_plus = projector_A(h_minus, "plus", transform)
    inner = bracket(model.gamma_inverse(eta), u_plus)
    z_rate = model.sigma_inverse(model.gamma(projector_A(h_minus, "minus", inner)))
    omega = adjoint(h_minus, transform)
    return StateDerivative(
        h_plus=_split_slot(model, adjoint(h_minus, u_plus), "plus", "ḣ"),
        z=_split_slot(model, z_rate, "plus", "Ż"),
        g_minus=_frame_velocity(state, omega),
    )


def omega_gamma_rhs(state: PhaseState, form: Form = "form0") -> StateDerivative:
    """Return the (Ω, Γ) equations in one of three equivalent forms.

    form0: Γ̇ = Π₋[Γ, Ω₊]; form1: Γ̇ = −Π₋[Γ, Ω₋]; form2: Γ̇ = −[Γ, Ω₋].
    All forms share (h₊)⁻¹ḣ₊ = Ω₊.
    """
    if state.coordinates != "omega_gamma":
        raise InitialDataError("omega_gamma_rhs needs (Ω, Γ) coordinates")
    model = state.model
    omega, gamma = state.omega, state.gamma
    plus = model.project(omega, "plus")
    minus = model.project(omega, "minus")
    if form == "form0":
        rate = model.project(bracket(gamma, plus), "minus")
    elif form == "form1":
        rate = -model.project(bracket(gamma, minus), "minus")
    elif form == "form2":
        rate = -bracket(gamma, minus)
    else:
        raise ValueError(f"unknown form {form!r}")
    return StateDerivative(h_plus=plus, gamma=rate, g_minus=_frame_velocity(state, omega))


def forms_disagreement(state: PhaseState) -> float:
    """Return the largest pairwise difference of the three Γ̇ forms."""
    rates = [omega_gamma_rhs(state, form).gamma for form in FORMS]
    return max(rates[i].distance(rates[j]) for i in range(3) for j in range(i + 1, 3))


def factor_rhs(state: PhaseState, ham: HamiltonianSpec) -> StateDerivative:
    """Return h₊⁻¹ḣ₊ = Ω₊, g₋⁻¹ġ₋ = Ad_{g₋⁻¹}Ω₋, Γ̇ = −[Γ, Ω₋] with Ω = ℒ(γΓ)."""
    if state.g_minus is None:
        raise InitialDataError("the factor system needs the frame g₋")
    state = to_omega_gamma(state, ham)
    return omega_gamma_rhs(replace(state, omega=ham.omega(state.gamma)), "form2")


# Nested variables ======================================================================


@dataclass(frozen=True, eq=False)
class NestedVariables:
    """Level-down variables (Ω̃, N, Γ̃, M, R₋) of a state on a semidirect fiber."""

    omega_tilde: AlgebraElement
    n: AlgebraElement
    gamma_tilde: AlgebraElement
    m: AlgebraElement
    r_minus: AlgebraElement

    @property
    def model(self) -> AlgebraModel:
        return tower_level(self.omega_tilde.descriptor.level)


@dataclass(frozen=True, eq=False)
class NestedDerivative:
    """Rates of (h₀⁺, Z₀⁺, Γ̃, M); h₀⁺ is left trivialized."""

    h_plus: AlgebraElement
    z_plus: AlgebraElement
    gamma_tilde: AlgebraElement
    m: AlgebraElement


def pack_nested(variables: NestedVariables) -> tuple[AlgebraElement, AlgebraElement]:
    """Return Ω = (Ω̃, [R, Ω̃] + N) and Γ = (Γ̃, [R, Γ̃] + M)."""
    r = variables.r_minus
    omega = AlgebraElement.from_halves(variables.omega_tilde, bracket(r, variables.omega_tilde) + variables.n)
    gamma = AlgebraElement.from_halves(variables.gamma_tilde, bracket(r, variables.gamma_tilde) + variables.m)
    return omega, gamma


def unpack_nested(omega: AlgebraElement, gamma: AlgebraElement, r_minus: AlgebraElement) -> NestedVariables:
    """Invert pack_nested for a given R₋."""
    omega_tilde, omega_second = omega.halves()
    gamma_tilde, gamma_second = gamma.halves()
    return NestedVariables(
        omega_tilde,
        omega_second - bracket(r_minus, omega_tilde),
        gamma_tilde,
        gamma_second - bracket(r_minus, gamma_tilde),
        r_minus,
    )


def base_shift(base: FiberBasePoint) -> AlgebraElement:
    """Return R₋ = Ad_{h₀⁻}Z₀⁻ for the base h₋ = (h₀⁻, Z₀⁻)."""
    if base.level < 1:
        raise LevelMismatch("nested variables need a semidirect configuration group")
    return adjoint(base.h_minus.base, base.h_minus.fiber)


def nested_variables(state: PhaseState, ham: HamiltonianSpec) -> NestedVariables:
    state = to_omega_gamma(state, ham)
    return unpack_nested(state.omega, state.gamma, base_shift(state.base))


def nested_rhs(variables: NestedVariables, z_plus: AlgebraElement, reduced: bool = False) -> NestedDerivative:
    """Return the equations of motion written one level down.

    (h₀⁺)⁻¹ḣ₀⁺ = Ω̃₊
    Ż₀⁺ = −[Ω̃₊, Z₀⁺] + Π₊([R, Ω̃] + N)
    Γ̃̇ = Π₋[Γ̃, Ω̃₊]
    Ṁ = Π₋[Γ̃, N₊] + Π₋[M, Ω̃₊] + [Π₋[Γ̃, Ω̃₊], R] + Π₋[Γ̃, Π₊[R, Ω̃]] + Π₋[[R, Γ̃], Ω̃₊]

    reduced=True uses the R = 0 form and requires R = 0.
    """
    model = variables.model
    r = variables.r_minus
    if reduced and r.norm() > MEMBERSHIP_TOLERANCE:
        raise InitialDataError("the reduced nested system needs R₋ = 0")
    omega_plus = model.project(variables.omega_tilde, "plus")
    n_plus = model.project(variables.n, "plus")
    gamma_tilde, m = variables.gamma_tilde, variables.m

    def minus(x: AlgebraElement) -> AlgebraElement:
        return model.project(x, "minus")

    gamma_rate = minus(bracket(gamma_tilde, omega_plus))
    if reduced:
        z_rate = -bracket(omega_plus, z_plus) + n_plus
        m_rate = minus(bracket(gamma_tilde, n_plus)) + minus(bracket(m, omega_plus))
    else:
        shifted = bracket(r, variables.omega_tilde)
        z_rate = -bracket(omega_plus, z_plus) + model.project(shifted + variables.n, "plus")
        m_rate = (
            minus(bracket(gamma_tilde, n_plus))
            + minus(bracket(m, omega_plus))
            + bracket(gamma_rate, r)
            + minus(bracket(gamma_tilde, model.project(shifted, "plus")))
            + minus(bracket(bracket(r, gamma_tilde), omega_plus))
        )
    return NestedDerivative(omega_plus, z_rate, gamma_rate, m_rate)


def dressing_nested_rhs(variables: NestedVariables) -> tuple[AlgebraElement, AlgebraElement]:
    """Return (Γ̃₋ rate, M₋ rate) as dressing actions of the plus velocities.

    Γ̃̇₋ = (Γ̃₋)^{Ω̃₊} and Ṁ₋ = (Γ̃₋)^{N₊} + (M₋)^{Ω̃₊}.
    """
    model = variables.model
    split = model.split
    gamma_minus = model.project(variables.gamma_tilde, "minus")
    m_minus = model.project(variables.m, "minus")
    omega_plus = model.project(variables.omega_tilde, "plus")
    n_plus = model.project(variables.n, "plus")
    gamma_rate = dressing_component(gamma_minus, omega_plus, split, "minus")
    m_rate = dressing_component(gamma_minus, n_plus, split, "minus") + dressing_component(
        m_minus, omega_plus, split, "minus"
    )
    return gamma_rate, m_rate


# Integration ===========================================================================


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, dt: float) -> np.ndarray:
    """Return one classical Runge-Kutta step."""
    slopes = [f(t, y)]
    last = len(RK4_BT) - 1
    for stage, weights in RK4_BT.items():
        increment = dt * sum(w * k for w, k in zip(weights, slopes))
        if stage == last:
            return y + increment
        slopes.append(f(t + RK4_EVAL_STAGES[stage + 1] * dt, y + increment))
    raise AssertionError("unreachable")


def rk4_solve(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    times: np.ndarray,
    dt: float,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Integrate y' = f(t, y) and return y at the given sample times.

    Each sample interval is split into equal steps no longer than dt and the
    optional projection is applied after every step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be strictly increasing")
    y = np.array(y0, dtype=float)
    samples = [y.copy()]
    for start, stop in zip(times[:-1], times[1:]):
        steps = max(1, math.ceil((stop - start) / dt - 1e-9))
        step = (stop - start) / steps
        for index in range(steps):
            t = start + index * step
            try:
                candidate = rk4_step(f, t, y, step)
                if project is not None:
                    candidate = project(candidate)
            except (FloatingPointError, np.linalg.LinAlgError) as err:
                raise IntegrationAborted(f"step failed: {err}", t, last_state=y) from err
            if not np.all(np.isfinite(candidate)):
                raise IntegrationAborted("non-finite state", t, last_state=y)
            y = candidate
        samples.append(y.copy())
    return np.array(samples)


@dataclass(frozen=True, eq=False)
class FlatOperators:
    """Matrices a flow on a fixed fiber applies to raw coefficient arrays."""

    constants: np.ndarray
    plus: np.ndarray
    minus: np.ndarray
    sigma: np.ndarray
    sigma_inverse: np.ndarray
    form: np.ndarray
    form_inverse: np.ndarray
    ad_base: np.ndarray
    ad_base_inverse: np.ndarray

    @classmethod
    def for_base(cls, base: FiberBasePoint) -> FlatOperators:
        model = base.model
        return cls(
            constants=model.descriptor.structure_constants,
            plus=model.split.mask("plus"),
            minus=model.split.mask("minus"),
            sigma=model.sigma_matrix,
            sigma_inverse=np.linalg.inv(model.sigma_matrix),
            form=model.form.matrix,
            form_inverse=np.linalg.inv(model.form.matrix),
            ad_base=adjoint_operator(base.h_minus),
            ad_base_inverse=adjoint_operator(group_inverse(base.h_minus)),
        )


@dataclass(frozen=True, eq=False)
class FlowSystem:
    """A flow on a fiber written on flat real vectors for the integrator.

    coordinates "hz" integrates the collective equations; "omega_gamma"
    integrates the (Ω, Γ) equations in the chosen form with Ω = ℒ(γΓ).
    Both carry h₊ and the frame g₋.  The right hand side works on raw
    arrays with the base point operators computed once and no validation;
    it agrees with collective_rhs and omega_gamma_rhs.
    """

    base: FiberBasePoint
    ham: HamiltonianSpec
    coordinates: str = "hz"
    form: Form = "form0"
    name: str = ""

    def __post_init__(self) -> None:
        _require_collective(self.ham, self.base.level)
        if self.coordinates not in ("hz", "omega_gamma"):
            raise ValueError(f"unknown coordinates {self.coordinates!r}")
        if self.form not in FORMS:
            raise ValueError(f"unknown form {self.form!r}")

    @property
    def _sizes(self) -> tuple[int, int]:
        return flat_size(self.base.level), self.base.model.dim

    @functools.cached_property
    def operators(self) -> FlatOperators:
        return FlatOperators.for_base(self.base)

    def pack(self, state: PhaseState) -> np.ndarray:
        if state.g_minus is None:
            state = replace(state, g_minus=identity(self.base.level, "minus"))
        state = to_omega_gamma(state, self.ham) if self.coordinates == "omega_gamma" else from_omega_gamma(state)
        algebra = state.z if self.coordinates == "hz" else state.gamma
        return np.concatenate([flatten(state.h_plus), algebra.coefficients, flatten(state.g_minus)])

    def unpack(self, values: np.ndarray, time: float = 0.0, validate: bool = True) -> PhaseState:
        group, dim = self._sizes
        level = self.base.level
        model = self.base.model
        h_plus = unflatten(values[:group], level, "plus", validate)
        algebra = model.element(values[group:group + dim])
        g_minus = unflatten(values[group + dim:], level, "minus", validate)
        if self.coordinates == "hz":
            return PhaseState(self.base, h_plus, z=algebra, g_minus=g_minus, time=time)
        return PhaseState(
            self.base, h_plus, omega=self.ham.omega(algebra), gamma=algebra, g_minus=g_minus, time=time
        )

    def collective_rates(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (h₊⁻¹ḣ₊, Ż, Ω) of the collective equations on arrays."""
        ops = self.operators
        eta = ops.sigma @ z
        omega = ops.ad_base @ self.ham.legendre_values(eta)
        u_plus = ops.ad_base_inverse @ (ops.plus * omega)
        inner = structure_bracket(ops.constants, ops.form_inverse @ eta, u_plus)
        z_rate = ops.sigma_inverse @ (ops.form @ (ops.ad_base_inverse @ (ops.minus * (ops.ad_base @ inner))))
        return ops.plus * omega, ops.plus * z_rate, omega

    def omega_gamma_rates(self, gamma: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (h₊⁻¹ḣ₊, Γ̇, Ω) of the (Ω, Γ) equations on arrays."""
        ops = self.operators
        omega = self.ham.legendre_values(ops.form @ gamma)
        plus, minus = ops.plus * omega, ops.minus * omega
        if self.form == "form0":
            rate = ops.minus * structure_bracket(ops.constants, gamma, plus)
        elif self.form == "form1":
            rate = -ops.minus * structure_bracket(ops.constants, gamma, minus)
        else:
            rate = -structure_bracket(ops.constants, gamma, minus)
        return plus, rate, omega

    @finite_result
    def flat_derivative(self, t: float, values: np.ndarray) -> np.ndarray:
        group, dim = self._sizes
        level = self.base.level
        h_plus, algebra, g_minus = values[:group], values[group:group + dim], values[group + dim:]
        if self.coordinates == "hz":
            velocity, rate, omega = self.collective_rates(algebra)
        else:
            velocity, rate, omega = self.omega_gamma_rates(algebra)
        frame_rate = flat_right_tangent(g_minus, level, self.operators.minus * omega)
        return np.concatenate([flat_tangent(h_plus, level, velocity), rate, frame_rate])

    def project(self, values: np.ndarray) -> np.ndarray:
        """Reproject the group slots onto their groups."""
        group, dim = self._sizes
        level = self.base.level
        return np.concatenate(
            [
                flat_reproject(values[:group], level, "plus"),
                values[group:group + dim],
                flat_reproject(values[group + dim:], level, "minus"),
            ]
        )


def collective_flow(base: FiberBasePoint, ham: HamiltonianSpec) -> FlowSystem:
    return FlowSystem(base, ham, "hz", name="collective")


def omega_gamma_flow(base: FiberBasePoint, ham: HamiltonianSpec, form: Form = "form0") -> FlowSystem:
    return FlowSystem(base, ham, "omega_gamma", form, name=f"omega_gamma_{form}")


def factor_flow(base: FiberBasePoint, ham: HamiltonianSpec) -> FlowSystem:
    """Return the (h₊, g₋, Γ) system solved exactly by factorization."""
    return FlowSystem(base, ham, "omega_gamma", "form2", name="factor")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled states with their invariant columns."""

    times: np.ndarray
    states: list[PhaseState]
    invariants: dict[str, np.ndarray] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        if times.size != len(self.states):
            raise ValueError("one state per sample time is required")
        if np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        descriptors = {id(state.model.descriptor) for state in self.states}
        if len(descriptors) > 1:
            raise LevelMismatch("trajectory states use different algebras")
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return len(self.states)


def integrate(
    system: FlowSystem,
    state0: PhaseState,
    t_span: tuple[float, float],
    dt: float,
    samples: int,
) -> Trajectory:
    """Integrate a flow with RK4 and reprojection, returning sampled states."""
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 <= t0:
        raise ValueError("t_span must be increasing")
    if samples < 2:
        raise ValueError("at least two samples are needed")
    times = np.linspace(t0, t1, samples)
    _LOGGER.info("Integrating %s flow on [%s, %s] with dt=%s", system.name, t0, t1, dt)
    start = system.project(system.pack(state0))
    try:
        values = rk4_solve(system.flat_derivative, start, times, dt, project=system.project)
    except IntegrationAborted as err:
        last = system.unpack(err.last_state, err.time, validate=False)
        raise IntegrationAborted("integration aborted", err.time, last_state=last) from err
    states = [system.unpack(row, t) for row, t in zip(values, times)]
    trajectory = Trajectory(times, states, name=system.name)
    return replace(trajectory, invariants=invariant_report(trajectory, system.ham))


# Invariants ============================================================================


def frame_theta(state: PhaseState, ham: HamiltonianSpec) -> AlgebraElement | None:
    """Return Θ = ℒ(γ(Ad_{g₋⁻¹}Γ)) from the tracked frame, None without one."""
    if state.g_minus is None:
        return None
    state = to_omega_gamma(state, ham)
    return ham.omega(adjoint(group_inverse(state.g_minus), state.gamma))


def invariant_report(trajectory: Trajectory, ham: HamiltonianSpec) -> dict[str, np.ndarray]:
    """Return the invariant columns of a trajectory.

    theta_drift |Θ(t) − Θ(0)|, energy_drift |𝗁(γΓ(t)) − 𝗁(γΓ(0))|,
    gamma_casimir_drift |k(Γ, Γ)(t) − k(Γ, Γ)(0)|, commutator_norm |[Γ, Ω]|,
    projector_norm |Π₊[Γ, Ω₋]| and base_drift, the distance of Ψ(t) to the
    base point for (h₊, Z) states and zero otherwise.
    """
    keys = ("theta_drift", "energy_drift", "gamma_casimir_drift", "commutator_norm", "projector_norm", "base_drift")
    columns = {key: [] for key in keys}
    reference = None
    for state in trajectory.states:
        model = state.model
        twisted = to_omega_gamma(state, ham)
        gamma, omega = twisted.gamma, twisted.omega
        theta = frame_theta(state, ham)
        energy = ham.energy(model.gamma(gamma))
        casimir = model.k(gamma, gamma)
        if reference is None:
            reference = (theta, energy, casimir)
        columns["theta_drift"].append(np.nan if theta is None else theta.distance(reference[0]))
        columns["energy_drift"].append(abs(energy - reference[1]))
        columns["gamma_casimir_drift"].append(abs(casimir - reference[2]))
        columns["commutator_norm"].append(bracket(gamma, omega).norm())
        columns["projector_norm"].append(model.project(bracket(gamma, model.project(omega, "minus")), "plus").norm())
        columns["base_drift"].append(fiber_distance(state.point(), state.base) if state.coordinates == "hz" else 0.0)
    report = {key: np.array(values) for key, values in columns.items()}
    _LOGGER.debug(
        "Invariant report for %s: max theta drift %s, max energy drift %s",
        trajectory.name,
        float(np.nanmax(report["theta_drift"])) if len(trajectory) else 0.0,
        float(np.max(report["energy_drift"])) if len(trajectory) else 0.0,
    )
    return report
