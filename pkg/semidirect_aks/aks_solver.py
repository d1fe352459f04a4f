"""Exact solutions by factorization of exponential curves.

Given Θ∘ = ℒ(γΓ∘) the curve k(t) = h₊∘·exp(tΘ∘) factorizes as h₊(t)g₋(t)
and Γ(t) = Ad_{g₋(t)}Γ∘, Ω(t) = ℒ(γΓ(t)) solve the (Ω, Γ) equations.  The
SL(2,C) example at level 1 also has fully explicit factors.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .brackets import FiberBasePoint
from .const import FD_STEP, MAX_TOWER_LEVEL, SAMPLE_FD_SPACING
from .dynamics import (
    HamiltonianSpec,
    NestedVariables,
    PhaseState,
    Trajectory,
    base_shift,
    invariant_report,
    nested_rhs,
    omega_gamma_rhs,
    quadratic_km,
    to_omega_gamma,
    unpack_nested,
)
from .exceptions import (
    FactorizationFailed,
    InitialDataError,
    LevelMismatch,
    UnsupportedLevel,
)
from .lie_core import AlgebraElement, bracket, character_space
from .matrix_group import (
    AnyGroupElement,
    GroupElement,
    SemidirectGroupElement,
    adjoint,
    factorize,
    flat_to_velocity,
    flatten,
    group_exp,
    group_inverse,
    group_mul,
    identity,
    projector_A,
)
from .sl2c_model import build_model, from_su2_vector, su2_vector, tower_level
from .utils import five_point_derivative, max_abs, uniform_coefficients

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class AksInitialData:
    """Generator Θ∘, momentum Γ∘ and starting plus factor of an exact solution."""

    theta0: AlgebraElement
    gamma0: AlgebraElement
    h_plus0: AnyGroupElement | None = None
    x0_plus: np.ndarray | None = None
    y0_plus: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.theta0.descriptor.level != self.gamma0.descriptor.level:
            raise LevelMismatch("Θ∘ and Γ∘ live on different levels")
        if self.h_plus0 is None:
            object.__setattr__(self, "h_plus0", identity(self.level, "plus"))
        elif self.h_plus0.level != self.level or self.h_plus0.side != "plus":
            raise InitialDataError("h₊∘ must be a plus element of the algebra level")

    @property
    def level(self) -> int:
        return self.theta0.descriptor.level

    @property
    def model(self):
        return tower_level(self.level)


def initial_data(
    gamma0: AlgebraElement, ham: HamiltonianSpec, h_plus0: AnyGroupElement | None = None
) -> AksInitialData:
    """Return the data with Θ∘ = ℒ(γΓ∘)."""
    return AksInitialData(ham.omega(gamma0), gamma0, h_plus0)


def initial_data_from_state(state: PhaseState, ham: HamiltonianSpec) -> AksInitialData:
    """Return the data reproducing a phase state at its time origin."""
    twisted = to_omega_gamma(state, ham)
    return initial_data(twisted.gamma, ham, twisted.h_plus)


def initial_data_from_su2(x0_plus, y0_plus) -> AksInitialData:
    """Return Θ∘ = (i/2)(X₀⁺, Y₀⁺) and Γ∘ = (X₀⁺, Y₀⁺) from su(2) coordinates."""
    x0 = np.asarray(x0_plus, dtype=float)
    y0 = np.asarray(y0_plus, dtype=float)
    if x0.shape != (3,) or y0.shape != (3,):
        raise InitialDataError("X₀⁺ and Y₀⁺ need three su(2) coordinates")
    if not np.linalg.norm(x0) > 0:
        raise InitialDataError("X₀⁺ must not vanish")
    gamma0 = AlgebraElement.from_halves(from_su2_vector(x0), from_su2_vector(y0))
    theta0 = 0.5 * tower_level(1).j_multiply(gamma0)
    return AksInitialData(theta0, gamma0, x0_plus=x0, y0_plus=y0)


def check_initial_data(data: AksInitialData, ham: HamiltonianSpec, tolerance: float = 1e-10) -> None:
    """Raise InitialDataError unless Θ∘ = ℒ(γΓ∘)."""
    if ham.level != data.level:
        raise LevelMismatch(f"hamiltonian of level {ham.level} for data of level {data.level}")
    defect = data.theta0.distance(ham.omega(data.gamma0))
    if defect > tolerance * max(1.0, data.theta0.norm()):
        raise InitialDataError(f"Θ∘ differs from ℒ(γΓ∘) by {defect:.3e}")


def theta_map(k: AnyGroupElement, gamma: AlgebraElement, ham: HamiltonianSpec) -> AlgebraElement:
    """Return Θ(k, Γ) = ℒ(γ(Ad_{g₋⁻¹}Γ)) for k = h₊g₋."""
    _, g_minus = factorize(k)
    return ham.omega(adjoint(group_inverse(g_minus), gamma))


def null_field(
    k: AnyGroupElement, gamma: AlgebraElement, ham: HamiltonianSpec
) -> tuple[AlgebraElement, AlgebraElement]:
    """Return the null direction (k⁻¹k̇, Γ̇) = (Θ(k, Γ), −[Γ, Π₋ℒ(γΓ)])."""
    model = tower_level(k.level)
    rate = -bracket(gamma, model.project(ham.omega(gamma), "minus"))
    return theta_map(k, gamma, ham), rate


def theta_directional_derivative(
    k: AnyGroupElement, gamma: AlgebraElement, ham: HamiltonianSpec, step: float = FD_STEP
) -> float:
    """Return |dΘ| along the null field by central differences; zero up to O(step²)."""
    velocity, rate = null_field(k, gamma, ham)

    def moved(s: float) -> AlgebraElement:
        return theta_map(group_mul(k, group_exp(velocity * s)), gamma + rate * s, ham)

    return ((moved(step) - moved(-step)) / (2 * step)).norm()


def factors_at(data: AksInitialData, t: float) -> tuple[AnyGroupElement, AnyGroupElement]:
    """Return (h₊(t), g₋(t)) with h₊∘·exp(tΘ∘) = h₊(t)g₋(t)."""
    curve = group_mul(data.h_plus0, group_exp(data.theta0 * t))
    try:
        return factorize(curve)
    except FactorizationFailed as err:
        raise FactorizationFailed("factorization of the exponential curve failed", time=t) from err


def solve_at(data: AksInitialData, ham: HamiltonianSpec, t: float, base: FiberBasePoint | None = None) -> PhaseState:
    """Return the exact state at time t."""
    h_plus, g_minus = factors_at(data, t)
    gamma = adjoint(g_minus, data.gamma0)
    base = FiberBasePoint.identity(data.level) if base is None else base
    return PhaseState(base, h_plus, omega=ham.omega(gamma), gamma=gamma, g_minus=g_minus, time=float(t))


def solve_by_factorization(
    data: AksInitialData,
    ham: HamiltonianSpec,
    times,
    base: FiberBasePoint | None = None,
) -> Trajectory:
    """Return the exact trajectory sampled at the given times."""
    check_initial_data(data, ham)
    times = np.asarray(times, dtype=float)
    _LOGGER.info("Solving level %s data by factorization at %s samples", data.level, times.size)
    states = [solve_at(data, ham, t, base) for t in times]
    trajectory = Trajectory(times, states, name="factorization")
    return replace(trajectory, invariants=invariant_report(trajectory, ham))


def velocity_residual(
    data: AksInitialData, ham: HamiltonianSpec, t: float, spacing: float = SAMPLE_FD_SPACING
) -> float:
    """Return max(|h₊⁻¹ḣ₊ − Ω₊|, |ġ₋g₋⁻¹ − Ω₋|) by central differences."""
    model = data.model
    state = solve_at(data, ham, t)
    forward = solve_at(data, ham, t + spacing)
    backward = solve_at(data, ham, t - spacing)
    h_velocity = flat_to_velocity(state.h_plus, (flatten(forward.h_plus) - flatten(backward.h_plus)) / (2 * spacing))
    g_velocity = flat_to_velocity(state.g_minus, (flatten(forward.g_minus) - flatten(backward.g_minus)) / (2 * spacing))
    right = adjoint(state.g_minus, g_velocity)
    return max(
        h_velocity.distance(model.project(state.omega, "plus")),
        right.distance(model.project(state.omega, "minus")),
    )


def derivative_residual(
    data: AksInitialData,
    ham: HamiltonianSpec,
    times,
    spacing: float = SAMPLE_FD_SPACING,
) -> float:
    """Return the worst residual of the exact solution in the form2 equations.

    Γ̇ is taken by central differences with the given spacing and compared
    with −[Γ, Ω₋]; the Ω± identities of the factors are included.
    """
    worst = 0.0
    for t in np.asarray(times, dtype=float):
        state = solve_at(data, ham, t)
        forward = solve_at(data, ham, t + spacing).gamma
        backward = solve_at(data, ham, t - spacing).gamma
        rate = (forward - backward) / (2 * spacing)
        rhs = omega_gamma_rhs(state, "form2").gamma
        worst = max(worst, rate.distance(rhs), velocity_residual(data, ham, t, spacing))
    return worst


# SL(2,C) closed forms ==================================================================


def iterated_cross(x, y, n: int) -> np.ndarray:
    """Return x × (x × (… × y)) with n cross products."""
    x = np.asarray(x, dtype=float)
    result = np.asarray(y, dtype=float)
    for _ in range(n):
        result = np.cross(x, result)
    return result


def iterated_cross_closed_form(x, y, n: int) -> np.ndarray:
    """Return the closed form of iterated_cross for n >= 1."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if n == 0:
        return y
    norm = float(np.linalg.norm(x))
    if n % 2 == 0:
        return (-1) ** (n // 2 + 1) * norm ** (n - 2) * (np.dot(x, y) * x - norm**2 * y)
    return (-1) ** ((n - 1) // 2) * norm ** (n - 1) * np.cross(x, y)


def _require_unit(x: np.ndarray) -> None:
    norm = float(np.linalg.norm(x))
    if abs(norm - 1.0) > 1e-10:
        raise InitialDataError(f"X₀⁺ has norm {norm:.12g}, expected 1")


def ad_power(x0_plus: AlgebraElement, y0_plus: AlgebraElement, n: int, closed_form: bool = False) -> AlgebraElement:
    """Return (ad_X)ⁿ Y on su(2), by iteration or by the closed form for unit X."""
    if not closed_form or n == 0:
        result = y0_plus
        for _ in range(n):
            result = bracket(x0_plus, result)
        return result
    x = su2_vector(x0_plus)
    _require_unit(x)
    y = su2_vector(y0_plus)
    if n % 2 == 0:
        return (-1) ** (n // 2 + 1) * 2**n * (float(np.dot(x, y)) * x0_plus - y0_plus)
    return (-1) ** ((n - 1) // 2) * 2 ** (n - 1) * bracket(x0_plus, y0_plus)


def fiber_series(x0_plus, y0_plus, t: float) -> AlgebraElement:
    """Return the fiber of exp((it/2)(X, Y)) for unit X as a level 0 element.

    (i/2)(t − sinh t)(x·y)X + (i/2) sinh t Y + ¼(cosh t − 1)[X, Y]
    """
    x = np.asarray(x0_plus, dtype=float)
    y = np.asarray(y0_plus, dtype=float)
    _require_unit(x)
    model = build_model()
    big_x, big_y = from_su2_vector(x), from_su2_vector(y)
    imaginary = model.j_multiply(
        0.5 * (t - math.sinh(t)) * float(np.dot(x, y)) * big_x + 0.5 * math.sinh(t) * big_y
    )
    return imaginary + 0.25 * (math.cosh(t) - 1.0) * bracket(big_x, big_y)


@dataclass(frozen=True)
class ClosedFormFactors:
    """Explicit factors of exp((it/2)(X₀⁺, Y₀⁺)) in H₁⁺ × H₁⁻."""

    h0_plus: GroupElement
    k0_minus: GroupElement
    x1_plus: AlgebraElement
    x1_minus: AlgebraElement

    @property
    def plus(self) -> SemidirectGroupElement:
        return SemidirectGroupElement(self.h0_plus, self.x1_plus, "plus")

    @property
    def minus(self) -> SemidirectGroupElement:
        return SemidirectGroupElement(self.k0_minus, self.x1_minus, "minus")


def sl2c_group_factors(x0_plus, t: float) -> tuple[GroupElement, GroupElement]:
    """Return the SU(2) and B factors of exp(itX/2) for unit X = a·(X1, X2, X3)."""
    a1, a2, a3 = np.asarray(x0_plus, dtype=float)
    _require_unit(np.array([a1, a2, a3]))
    ch, sh = math.cosh(t / 2), math.sinh(t / 2)
    scale = math.sqrt(math.cosh(t) - a3 * math.sinh(t))
    off = complex(a1, -a2)
    h0 = np.array(
        [[(ch - a3 * sh) / scale, off * sh / scale], [-off.conjugate() * sh / scale, (ch - a3 * sh) / scale]]
    )
    k0 = np.array([[scale, -off * math.sinh(t) / scale], [0.0, 1.0 / scale]])
    return GroupElement(h0, "plus"), GroupElement(k0, "minus")


def sl2c_closed_form(x0_plus, y0_plus, t: float) -> ClosedFormFactors:
    """Return (h₀⁺, k₀⁻, X₁⁺, X₁⁻) with X₁⁺ = Π₊Ad_k𝔸₊(k)F and X₁⁻ = 𝔸₋(k)F."""
    h0, k0 = sl2c_group_factors(x0_plus, t)
    series = fiber_series(x0_plus, y0_plus, t)
    model = build_model().algebra
    x1_plus = model.project(adjoint(k0, projector_A(k0, "plus", series)), "plus")
    x1_minus = model.project(projector_A(k0, "minus", series), "minus")
    return ClosedFormFactors(h0, k0, x1_plus, x1_minus)


def sl2c_generic_factors(x0_plus, y0_plus, t: float) -> tuple[SemidirectGroupElement, SemidirectGroupElement]:
    """Return the same factors by the semidirect exponential and factorization."""
    data = initial_data_from_su2(x0_plus, y0_plus)
    return factorize(group_exp(data.theta0 * t))


def closed_form_deviation(x0_plus, y0_plus, t: float) -> float:
    """Return the sup distance between the closed form and the generic path."""
    closed = sl2c_closed_form(x0_plus, y0_plus, t)
    plus, minus = sl2c_generic_factors(x0_plus, y0_plus, t)
    return max(
        float(np.max(np.abs(flatten(closed.plus) - flatten(plus)))),
        float(np.max(np.abs(flatten(closed.minus) - flatten(minus)))),
    )


def solve_sl2c_closed_form(
    data: AksInitialData, ham: HamiltonianSpec, times, base: FiberBasePoint | None = None
) -> Trajectory:
    """Return the exact SL(2,C) trajectory from the explicit factors.

    A non-unit X₀⁺ is handled by rescaling time: with λ = |x|,
    exp((it/2)(X, Y)) = exp((iλt/2)(X/λ, Y/λ)).
    """
    if data.x0_plus is None:
        raise InitialDataError("closed form needs su(2) initial data")
    check_initial_data(data, ham)
    if not np.allclose(flatten(data.h_plus0), flatten(identity(1)), rtol=0.0, atol=1e-14):
        raise InitialDataError("closed form starts at h₊ = e")
    scale = float(np.linalg.norm(data.x0_plus))
    unit_x = data.x0_plus / scale
    unit_y = data.y0_plus / scale
    base = FiberBasePoint.identity(1) if base is None else base
    states = []
    for t in np.asarray(times, dtype=float):
        factors = sl2c_closed_form(unit_x, unit_y, scale * t)
        gamma = adjoint(factors.minus, data.gamma0)
        states.append(
            PhaseState(base, factors.plus, omega=ham.omega(gamma), gamma=gamma, g_minus=factors.minus, time=float(t))
        )
    trajectory = Trajectory(times, states, name="closed_form")
    return replace(trajectory, invariants=invariant_report(trajectory, ham))


# Tower ================================================================================


def admissible_gamma(plus_coeffs, minus_coeffs, level: int) -> AlgebraElement:
    """Return Γ with Γ₊ = γ⁻¹(χ) for χ a character of the minus subalgebra.

    plus_coeffs weight the character basis, minus_coeffs fill the minus indices.
    """
    model = tower_level(level)
    characters = character_space(model.descriptor, model.split.minus_basis_indices)
    plus_coeffs = np.asarray(plus_coeffs, dtype=float)
    if plus_coeffs.size != len(characters):
        raise InitialDataError(f"{len(characters)} character weights expected, got {plus_coeffs.size}")
    minus_indices = list(model.split.minus_basis_indices)
    minus_coeffs = np.asarray(minus_coeffs, dtype=float)
    if minus_coeffs.size != len(minus_indices):
        raise InitialDataError(f"{len(minus_indices)} minus coefficients expected, got {minus_coeffs.size}")
    values = np.zeros(model.dim)
    values[minus_indices] = minus_coeffs
    gamma = model.element(values)
    for weight, character in zip(plus_coeffs, characters):
        gamma = gamma + weight * model.gamma_inverse(character)
    return gamma


def random_admissible_gamma(rng: np.random.Generator, level: int, scale: float = 1.0) -> AlgebraElement:
    """Return admissible_gamma with uniform character weights and minus coefficients."""
    model = tower_level(level)
    count = len(character_space(model.descriptor, model.split.minus_basis_indices))
    minus = len(model.split.minus_basis_indices)
    return admissible_gamma(uniform_coefficients(rng, count, scale), uniform_coefficients(rng, minus, scale), level)


def level_down(
    gamma0: AlgebraElement, r_minus: AlgebraElement, g_minus: SemidirectGroupElement
) -> tuple[AlgebraElement, AlgebraElement]:
    """Return (Γ̃(t), M(t)) from the frame g₋ = (g₀⁻, W) and Γ∘ = (Γ′, Γ″).

    Γ̃ = Ad_{g₀⁻}Γ′ and M = [Ad_{g₀⁻}W − R, Ad_{g₀⁻}Γ′] + Ad_{g₀⁻}Γ″.
    """
    if not isinstance(g_minus, SemidirectGroupElement):
        raise LevelMismatch("level_down needs a semidirect frame")
    first, second = gamma0.halves()
    lower = g_minus.base
    gamma_tilde = adjoint(lower, first)
    m = bracket(adjoint(lower, g_minus.fiber) - r_minus, gamma_tilde) + adjoint(lower, second)
    return gamma_tilde, m


@dataclass(frozen=True, eq=False)
class TowerSolution:
    """Exact solution at one tower level with its level-down variables."""

    level: int
    trajectory: Trajectory
    nested: list[NestedVariables] = field(default_factory=list)

    def omega_gamma_defect(self) -> float:
        """Return max |Ω − Γ| along the solution."""
        return max(state.omega.distance(state.gamma) for state in self.trajectory.states)


def tower_solve(level: int, gamma0: AlgebraElement, times, base: FiberBasePoint | None = None) -> TowerSolution:
    """Solve the quadratic hamiltonian at a tower level and project one level down."""
    if level < 1 or level > MAX_TOWER_LEVEL:
        raise UnsupportedLevel(f"tower level {level} is outside 1..{MAX_TOWER_LEVEL}")
    if gamma0.descriptor.level != level:
        raise LevelMismatch(f"Γ∘ of level {gamma0.descriptor.level} for tower level {level}")
    ham = quadratic_km(level)
    base = FiberBasePoint.identity(level) if base is None else base
    trajectory = solve_by_factorization(initial_data(gamma0, ham), ham, times, base)
    r_minus = base_shift(base)
    nested = []
    for state in trajectory.states:
        gamma_tilde, m = level_down(gamma0, r_minus, state.g_minus)
        omega = unpack_nested(state.omega, state.gamma, r_minus)
        nested.append(NestedVariables(omega.omega_tilde, omega.n, gamma_tilde, m, r_minus))
    _LOGGER.debug("Tower level %s solved at %s samples", level, len(nested))
    return TowerSolution(level, trajectory, nested)


def tower_spacing(level: int) -> float:
    """Return the sample spacing for differentiating a tower solution of the given level.

    Rates grow quickly with the level, so the spacing halves per level.
    """
    return SAMPLE_FD_SPACING / 2 ** (level - 1)


def nested_residual(solution: TowerSolution, spacing: float | None = None) -> float:
    """Return the residual of the level-down variables in nested_rhs.

    Rates come from the fourth order five-point stencil on consecutive
    samples, so the trajectory must be sampled evenly with the given spacing
    (tower_spacing of the level by default) and have at least five samples.
    """
    spacing = tower_spacing(solution.level) if spacing is None else spacing
    states = solution.trajectory.states
    times = solution.trajectory.times
    if len(states) < 5:
        raise ValueError("at least five samples are needed")
    lower = tower_level(solution.level - 1)
    worst = 0.0
    for index in range(2, len(states) - 2):
        if abs(times[index + 2] - times[index - 2] - 4 * spacing) > 1e-12:
            raise ValueError("samples must be evenly spaced by the given spacing")
        window = range(index - 2, index + 3)
        here = solution.nested[index]
        h_here = states[index].h_plus
        rates = nested_rhs(here, h_here.fiber)
        gamma_rate = five_point_derivative([solution.nested[i].gamma_tilde.coefficients for i in window], spacing)
        m_rate = five_point_derivative([solution.nested[i].m.coefficients for i in window], spacing)
        z_rate = five_point_derivative([states[i].h_plus.fiber.coefficients for i in window], spacing)
        base_rate = five_point_derivative([flatten(states[i].h_plus.base) for i in window], spacing)
        h_rate = flat_to_velocity(h_here.base, base_rate)
        worst = max(
            worst,
            max_abs(gamma_rate - rates.gamma_tilde.coefficients),
            max_abs(m_rate - rates.m.coefficients),
            max_abs(z_rate - rates.z_plus.coefficients),
            lower.project(h_rate, "plus").distance(rates.h_plus),
        )
    return worst


def solution_deviation(first: Trajectory, second: Trajectory) -> dict[str, float]:
    """Return the sup deviation per column group of two trajectories on the same times."""
    if first.times.shape != second.times.shape or np.max(np.abs(first.times - second.times), initial=0.0) > 1e-12:
        raise ValueError("trajectories are sampled at different times")
    groups = {"h_plus": 0.0, "g_minus": 0.0, "gamma": 0.0}
    for a, b in zip(first.states, second.states):
        groups["h_plus"] = max(groups["h_plus"], float(np.max(np.abs(flatten(a.h_plus) - flatten(b.h_plus)))))
        if a.g_minus is not None and b.g_minus is not None:
            groups["g_minus"] = max(groups["g_minus"], float(np.max(np.abs(flatten(a.g_minus) - flatten(b.g_minus)))))
        groups["gamma"] = max(groups["gamma"], _gamma_of(a).distance(_gamma_of(b)))
    return groups


def _gamma_of(state: PhaseState) -> AlgebraElement:
    if state.gamma is not None:
        return state.gamma
    model = state.model
    return adjoint(state.base.h_minus, model.gamma_inverse(model.sigma(state.z)))
