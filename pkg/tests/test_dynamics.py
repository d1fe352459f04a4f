"""Tests for hamiltonians, fiber equations and the integrator."""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from scipy import linalg

from semidirect_aks.aks_solver import (
    initial_data_from_state,
    random_admissible_gamma,
    solution_deviation,
    solve_by_factorization,
)
from semidirect_aks.brackets import (
    FiberBasePoint,
    canonical_poisson,
    differential_of,
    linear_observable,
    momentum_function,
)
from semidirect_aks.dynamics import (
    HamiltonianSpec,
    NestedVariables,
    PhaseState,
    Trajectory,
    base_shift,
    canonical_vector_field,
    check_equivariance,
    collective_flow,
    collective_rhs,
    dirac_vector_field,
    dressing_nested_rhs,
    factor_flow,
    factor_rhs,
    forms_disagreement,
    from_omega_gamma,
    gamma_character_condition,
    hamiltonian_by_name,
    initial_state,
    integrate,
    left_invariant_vector_field,
    legendre_residual,
    nested_rhs,
    nested_variables,
    omega_gamma_flow,
    omega_gamma_rhs,
    pack_nested,
    quadratic_km,
    rk4_solve,
    sl2c_h2,
    to_omega_gamma,
    unpack_nested,
)
from semidirect_aks.exceptions import (
    InitialDataError,
    IntegrationAborted,
    LevelMismatch,
    NonCollectiveHamiltonian,
)
from semidirect_aks.lie_core import pairing
from semidirect_aks.matrix_group import (
    GroupElement,
    SemidirectGroupElement,
    flatten,
    identity,
    random_element,
    tangent_flat,
)
from semidirect_aks.sl2c_model import build_model, from_su2_vector, tower_level


def _b(a, b, c):
    return GroupElement(np.array([[a, complex(b, c)], [0.0, 1.0 / a]]), "minus")


@pytest.fixture
def fiber_state(rng):
    """A collective state over a twisted base with a character Z₋ = 0.05 H."""
    model = tower_level(0)
    base = FiberBasePoint(_b(1.2, 0.3, -0.1), 0.05 * model.basis("H"))
    z_plus = model.project(model.element(rng.uniform(-1.0, 1.0, 6)), "plus")
    return initial_state(base, random_element(rng, 0, "plus"), z_plus)


def test_quadratic_legendre_is_gamma_inverse(rng):
    ham = quadratic_km(1)
    eta = ham.model.coelement(rng.uniform(-1.0, 1.0, 12))
    assert ham.legendre(eta).distance(ham.model.gamma_inverse(eta)) == 0.0
    assert legendre_residual(ham, eta) < 1e-7


def test_sl2c_legendre_transform(rng):
    ham = sl2c_h2()
    eta = ham.model.coelement(rng.uniform(-1.0, 1.0, 12))
    assert legendre_residual(ham, eta) < 1e-7


def test_sl2c_energy_on_su2_data():
    ham = sl2c_h2()
    x, y = np.array([0.2, -0.4, 1.0]), np.array([0.5, 0.3, -0.7])
    gamma = tower_level(1).element(np.concatenate([from_su2_vector(x).coefficients, from_su2_vector(y).coefficients]))
    assert ham.energy(ham.model.gamma(gamma)) == pytest.approx(0.5 * np.dot(x, y), abs=1e-13)


@pytest.mark.parametrize("ham", [quadratic_km(1), sl2c_h2()], ids=["quadratic_km", "sl2c_h2"])
def test_shipped_hamiltonians_are_equivariant(rng, ham):
    assert check_equivariance(ham, rng) is ham


def test_projected_legendre_is_not_equivariant(rng):
    model = tower_level(0)
    ham = HamiltonianSpec(
        "custom",
        0,
        lambda eta: model.project(model.gamma_inverse(eta), "plus"),
        lambda eta: 0.0,
        name="projected",
    )
    with pytest.raises(NonCollectiveHamiltonian):
        check_equivariance(ham, rng)


def test_hamiltonian_lookup():
    assert hamiltonian_by_name("zero", 2).level == 2
    with pytest.raises(NonCollectiveHamiltonian):
        hamiltonian_by_name("kinetic", 0)
    with pytest.raises(LevelMismatch):
        hamiltonian_by_name("sl2c_h2", 0)


def test_phase_state_needs_one_coordinate_system():
    base = FiberBasePoint.identity(0)
    with pytest.raises(InitialDataError):
        PhaseState(base, identity(0, "plus"))


def test_coordinate_changes_round_trip(fiber_state):
    ham = quadratic_km(0)
    twisted = to_omega_gamma(fiber_state, ham)
    assert twisted.coordinates == "omega_gamma"
    assert twisted.omega.distance(twisted.gamma) < 1e-14
    back = from_omega_gamma(twisted)
    assert back.z.distance(fiber_state.z) < 1e-12


def test_collective_rhs_stays_on_the_fiber(fiber_state):
    rates = collective_rhs(fiber_state, quadratic_km(0))
    model = tower_level(0)
    assert model.project(rates.h_plus, "minus").norm() == 0.0
    assert model.project(rates.z, "minus").norm() == 0.0


def test_forms_agree_for_admissible_momentum(rng):
    ham = quadratic_km(1)
    base = FiberBasePoint.identity(1)
    for _ in range(5):
        gamma = random_admissible_gamma(rng, 1)
        assert gamma_character_condition(gamma, tower_level(1))
        state = PhaseState(base, identity(1, "plus"), omega=ham.omega(gamma), gamma=gamma)
        assert forms_disagreement(state) < 1e-10


def test_forms_disagree_off_the_character_condition():
    model = build_model()
    ham = quadratic_km(0)
    gamma = model.basis("X1") + model.basis("H")
    state = PhaseState(FiberBasePoint.identity(0), identity(0, "plus"), omega=ham.omega(gamma), gamma=gamma)
    # the plus part of [H, X1] = −2X1 + 4iE separates form2 from the others
    form0 = omega_gamma_rhs(state, "form0").gamma
    form2 = omega_gamma_rhs(state, "form2").gamma
    assert form2.distance(form0) == pytest.approx(2.0)
    assert forms_disagreement(state) == pytest.approx(2.0)


def test_rk4_solve_linear_system():
    matrix = np.array([[0.0, 1.0], [-1.0, 0.0]])
    times = np.linspace(0.0, 1.0, 5)
    values = rk4_solve(lambda t, y: matrix @ y, np.array([1.0, 0.0]), times, 1e-2)
    exact = np.array([linalg.expm(matrix * t) @ np.array([1.0, 0.0]) for t in times])
    assert np.max(np.abs(values - exact)) < 1e-9


def test_rk4_solve_rejects_bad_arguments():
    with pytest.raises(ValueError):
        rk4_solve(lambda t, y: y, np.ones(1), np.array([0.0, 1.0]), 0.0)
    with pytest.raises(ValueError):
        rk4_solve(lambda t, y: y, np.ones(1), np.array([1.0, 0.0]), 0.1)


def test_rk4_solve_aborts_on_blow_up():
    with pytest.raises(IntegrationAborted) as err:
        rk4_solve(lambda t, y: y * np.inf, np.ones(1), np.array([0.0, 1.0]), 0.5)
    assert err.value.time == 0.0
    assert np.array_equal(err.value.last_state, np.ones(1))


def test_collective_integration_conserves_invariants(fiber_state):
    ham = quadratic_km(0)
    trajectory = integrate(collective_flow(fiber_state.base, ham), fiber_state, (0.0, 0.5), 1e-3, 6)
    assert len(trajectory) == 6
    invariants = trajectory.invariants
    assert np.max(invariants["theta_drift"]) < 1e-7
    assert np.max(invariants["energy_drift"]) < 1e-8
    assert np.max(invariants["gamma_casimir_drift"]) < 1e-8
    assert np.max(invariants["commutator_norm"]) < 1e-12
    assert np.max(invariants["base_drift"]) < 1e-9


def test_integrators_agree_with_factorization(fiber_state):
    ham = quadratic_km(0)
    collective = integrate(collective_flow(fiber_state.base, ham), fiber_state, (0.0, 0.5), 1e-3, 6)
    factor = integrate(factor_flow(fiber_state.base, ham), fiber_state, (0.0, 0.5), 1e-3, 6)
    exact = solve_by_factorization(initial_data_from_state(fiber_state, ham), ham, collective.times, fiber_state.base)
    for numeric in (collective, factor):
        deviation = solution_deviation(numeric, exact)
        assert max(deviation.values()) < 1e-8


def test_zero_hamiltonian_is_static(fiber_state):
    ham = hamiltonian_by_name("zero", 0)
    trajectory = integrate(collective_flow(fiber_state.base, ham), fiber_state, (0.0, 0.2), 1e-2, 3)
    first, last = trajectory.states[0], trajectory.states[-1]
    assert np.allclose(flatten(first.h_plus), flatten(last.h_plus), atol=1e-14)
    assert last.z.distance(first.z) == 0.0


def test_trajectory_needs_one_state_per_time(fiber_state):
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0]), [fiber_state])


def test_nested_variables_round_trip(rng):
    model = tower_level(1)
    omega = model.element(rng.uniform(-1.0, 1.0, 12))
    gamma = model.element(rng.uniform(-1.0, 1.0, 12))
    r_minus = tower_level(0).project(tower_level(0).element(rng.uniform(-1.0, 1.0, 6)), "minus")
    packed_omega, packed_gamma = pack_nested(unpack_nested(omega, gamma, r_minus))
    assert packed_omega.distance(omega) < 1e-14
    assert packed_gamma.distance(gamma) < 1e-14


def test_reduced_nested_system_needs_zero_shift():
    lower = tower_level(0)
    r_minus = lower.element([0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    variables = NestedVariables(lower.zero(), lower.zero(), lower.zero(), lower.zero(), r_minus)
    with pytest.raises(InitialDataError):
        nested_rhs(variables, lower.zero(), reduced=True)


def test_reduced_and_full_nested_systems_agree_at_zero_shift(rng):
    lower = tower_level(0)

    def draw():
        return lower.element(rng.uniform(-1.0, 1.0, 6))

    variables = NestedVariables(draw(), draw(), draw(), draw(), lower.zero())
    z_plus = lower.project(draw(), "plus")
    full = nested_rhs(variables, z_plus)
    reduced = nested_rhs(variables, z_plus, reduced=True)
    assert full.z_plus.distance(reduced.z_plus) < 1e-14
    assert full.m.distance(reduced.m) < 1e-14


def test_base_shift_needs_a_semidirect_base():
    with pytest.raises(LevelMismatch):
        base_shift(FiberBasePoint.identity(0))


def test_canonical_field_generates_the_bracket(rng, fiber_state):
    point = fiber_state.point()
    model = tower_level(0)
    f = linear_observable(model.element(rng.uniform(-1.0, 1.0, 6)))
    g = momentum_function(model.element(rng.uniform(-1.0, 1.0, 6)))
    field = canonical_vector_field(g, point)
    df = differential_of(f, point)
    along = pairing(df.group, field.group) + pairing(df.algebra, field.fiber)
    assert along == pytest.approx(canonical_poisson(f, g, point), abs=1e-10)


def test_left_invariant_field_drops_the_group_differential(rng, fiber_state):
    point = fiber_state.point()
    base = fiber_state.base
    model = tower_level(0)
    linear = linear_observable(model.element(rng.uniform(-1.0, 1.0, 6)))
    same = left_invariant_vector_field(linear, point, base) - dirac_vector_field(linear, point, base)
    assert same.norm() < 1e-14
    momentum = momentum_function(model.element(rng.uniform(-1.0, 1.0, 6)))
    left = left_invariant_vector_field(momentum, point, base)
    full = dirac_vector_field(momentum, point, base)
    assert left.group.distance(full.group) < 1e-14


def _admissible_state(rng, ham, frame=True):
    gamma = random_admissible_gamma(rng, 1)
    return PhaseState(
        FiberBasePoint.identity(1),
        random_element(rng, 1, "plus", scale=0.5),
        omega=ham.omega(gamma),
        gamma=gamma,
        g_minus=identity(1, "minus") if frame else None,
    )


def test_factor_rhs_is_the_minus_bracket_form(rng):
    ham = quadratic_km(1)
    state = _admissible_state(rng, ham)
    rates = factor_rhs(state, ham)
    expected = omega_gamma_rhs(state, "form2")
    assert rates.h_plus.distance(expected.h_plus) < 1e-14
    assert rates.gamma.distance(expected.gamma) < 1e-14
    assert rates.g_minus.distance(expected.g_minus) < 1e-14
    with pytest.raises(InitialDataError):
        factor_rhs(_admissible_state(rng, ham, frame=False), ham)


def test_check_omega_measures_the_admissibility_defect(rng):
    ham = quadratic_km(1)
    state = _admissible_state(rng, ham)
    assert state.check_omega(ham) < 1e-12
    doubled = PhaseState(state.base, state.h_plus, omega=state.omega * 2.0, gamma=state.gamma)
    with pytest.raises(InitialDataError):
        doubled.check_omega(ham)


def test_omega_gamma_flow_agrees_with_factor_flow(rng):
    ham = quadratic_km(1)
    state = _admissible_state(rng, ham)
    plain = integrate(omega_gamma_flow(state.base, ham), state, (0.0, 0.5), 1e-3, 6)
    factor = integrate(factor_flow(state.base, ham), state, (0.0, 0.5), 1e-3, 6)
    assert max(solution_deviation(plain, factor).values()) < 1e-8


def test_nested_variables_of_a_shifted_base(rng):
    ham = quadratic_km(1)
    lower = tower_level(0)
    z0_minus = lower.project(lower.element(rng.uniform(-1.0, 1.0, 6)), "minus")
    base = FiberBasePoint(SemidirectGroupElement(_b(1.2, 0.3, -0.1), z0_minus, "minus"), tower_level(1).zero())
    gamma = tower_level(1).element(rng.uniform(-1.0, 1.0, 12))
    state = PhaseState(base, identity(1, "plus"), omega=ham.omega(gamma), gamma=gamma)
    variables = nested_variables(state, ham)
    assert variables.r_minus.distance(base_shift(base)) == 0.0
    omega, packed_gamma = pack_nested(variables)
    assert omega.distance(state.omega) < 1e-14
    assert packed_gamma.distance(gamma) < 1e-14


def test_dressing_form_of_the_nested_system(rng):
    lower = tower_level(0)

    def draw():
        return lower.element(rng.uniform(-1.0, 1.0, 6))

    variables = NestedVariables(draw(), draw(), draw(), draw(), lower.zero())
    reduced = nested_rhs(variables, lower.project(draw(), "plus"), reduced=True)
    gamma_rate, m_rate = dressing_nested_rhs(variables)
    assert gamma_rate.distance(reduced.gamma_tilde) < 1e-14
    assert m_rate.distance(reduced.m) < 1e-14


def _with_frame(rng, state):
    return replace(state, g_minus=random_element(rng, state.level, "minus", scale=0.5))


def _object_rates(state, rates, algebra):
    return np.concatenate(
        [tangent_flat(state.h_plus, rates.h_plus), algebra.coefficients, tangent_flat(state.g_minus, rates.g_minus)]
    )


def test_flat_collective_rates_match_collective_rhs(rng, fiber_state):
    ham = quadratic_km(0)
    state = _with_frame(rng, fiber_state)
    system = collective_flow(state.base, ham)
    expected = _object_rates(state, collective_rhs(state, ham), collective_rhs(state, ham).z)
    assert np.max(np.abs(system.flat_derivative(0.0, system.pack(state)) - expected)) < 1e-12


def test_flat_collective_rates_over_a_shifted_semidirect_base(rng):
    ham = quadratic_km(1)
    lower = tower_level(0)
    z0_minus = lower.project(lower.element(rng.uniform(-1.0, 1.0, 6)), "minus")
    base = FiberBasePoint(SemidirectGroupElement(_b(1.2, 0.3, -0.1), z0_minus, "minus"), tower_level(1).zero())
    z_plus = tower_level(1).project(tower_level(1).element(rng.uniform(-1.0, 1.0, 12)), "plus")
    state = _with_frame(rng, initial_state(base, random_element(rng, 1, "plus", scale=0.5), z_plus))
    rates = collective_rhs(state, ham)
    system = collective_flow(base, ham)
    expected = _object_rates(state, rates, rates.z)
    assert np.max(np.abs(system.flat_derivative(0.0, system.pack(state)) - expected)) < 1e-12


@pytest.mark.parametrize("form", ["form0", "form1", "form2"])
def test_flat_omega_gamma_rates_match_omega_gamma_rhs(rng, form):
    ham = sl2c_h2()
    state = _with_frame(rng, _admissible_state(rng, ham))
    rates = omega_gamma_rhs(state, form)
    system = omega_gamma_flow(state.base, ham, form)
    expected = _object_rates(state, rates, rates.gamma)
    assert np.max(np.abs(system.flat_derivative(0.0, system.pack(state)) - expected)) < 1e-12


@pytest.mark.parametrize("ham", [quadratic_km(1), sl2c_h2(), hamiltonian_by_name("zero", 1)], ids=["km", "h2", "zero"])
def test_legendre_matrix_agrees_with_legendre(rng, ham):
    eta = ham.model.coelement(rng.uniform(-1.0, 1.0, 12))
    assert np.allclose(ham.legendre_values(eta.coefficients), ham.legendre(eta).coefficients, atol=1e-13)


def test_flow_projection_keeps_group_slots(rng, fiber_state):
    ham = quadratic_km(0)
    state = _with_frame(rng, fiber_state)
    system = collective_flow(state.base, ham)
    values = system.pack(state)
    assert np.allclose(system.project(values), values, atol=1e-12)
