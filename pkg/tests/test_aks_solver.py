"""Tests for the factorization solver and the SL(2,C) closed forms."""

import math
import time

import numpy as np
import pytest
from scipy import linalg

from semidirect_aks.aks_solver import (
    AksInitialData,
    ad_power,
    admissible_gamma,
    check_initial_data,
    closed_form_deviation,
    derivative_residual,
    fiber_series,
    initial_data,
    initial_data_from_su2,
    iterated_cross,
    iterated_cross_closed_form,
    nested_residual,
    random_admissible_gamma,
    sl2c_group_factors,
    solution_deviation,
    solve_by_factorization,
    solve_sl2c_closed_form,
    theta_directional_derivative,
    theta_map,
    tower_solve,
    tower_spacing,
)
from semidirect_aks.const import SAMPLE_FD_SPACING
from semidirect_aks.dynamics import factor_flow, gamma_character_condition, integrate, quadratic_km, sl2c_h2
from semidirect_aks.exceptions import InitialDataError, LevelMismatch, UnsupportedLevel
from semidirect_aks.lie_core import character_space
from semidirect_aks.matrix_group import flatten, group_mul, identity, random_element
from semidirect_aks.sl2c_model import build_model, from_su2_vector, tower_level


def _unit(rng):
    x = rng.normal(size=3)
    return x / np.linalg.norm(x)


@pytest.mark.parametrize("t", [-1.5, 0.3, 2.0])
def test_group_factors_multiply_to_exponential(rng, t):
    x = _unit(rng)
    h0, k0 = sl2c_group_factors(x, t)
    expected = linalg.expm(0.5j * t * build_model().realize(from_su2_vector(x)))
    np.testing.assert_allclose(h0.matrix @ k0.matrix, expected, atol=1e-12)


def test_group_factors_along_x3():
    t = 0.8
    h0, k0 = sl2c_group_factors([0.0, 0.0, 1.0], t)
    np.testing.assert_allclose(h0.matrix, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(k0.matrix, np.diag([math.exp(-t / 2), math.exp(t / 2)]), atol=1e-15)


def test_closed_form_matches_generic_factorization(rng):
    for _ in range(10):
        deviation = closed_form_deviation(_unit(rng), rng.uniform(-1.0, 1.0, 3), float(rng.uniform(-2.0, 2.0)))
        assert deviation < 1e-10


def test_closed_forms_need_unit_x():
    with pytest.raises(InitialDataError):
        fiber_series([0.0, 0.0, 2.0], [1.0, 0.0, 0.0], 0.5)
    with pytest.raises(InitialDataError):
        sl2c_group_factors([1.0, 1.0, 0.0], 0.5)
    model = build_model()
    with pytest.raises(InitialDataError):
        ad_power(2 * model.basis("X1"), model.basis("X2"), 3, closed_form=True)


@pytest.mark.parametrize("n", [0, 1, 2, 3, 4, 7])
def test_iterated_cross_closed_form(rng, n):
    x = rng.normal(size=3)
    y = rng.normal(size=3)
    np.testing.assert_allclose(iterated_cross_closed_form(x, y, n), iterated_cross(x, y, n), atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_ad_power_closed_form(rng, n):
    big_x = from_su2_vector(_unit(rng))
    big_y = from_su2_vector(rng.uniform(-1.0, 1.0, 3))
    brute = ad_power(big_x, big_y, n)
    assert brute.distance(ad_power(big_x, big_y, n, closed_form=True)) <= 1e-12 * max(1.0, brute.norm())


def test_fiber_series_at_zero_time(rng):
    assert fiber_series(_unit(rng), rng.uniform(-1.0, 1.0, 3), 0.0).norm() == 0.0


def test_factorization_solution_keeps_theta(rng):
    ham = sl2c_h2()
    data = initial_data_from_su2(_unit(rng), rng.uniform(-1.0, 1.0, 3))
    trajectory = solve_by_factorization(data, ham, np.linspace(0.0, 2.0, 11))
    for state in trajectory.states:
        k = group_mul(state.h_plus, state.g_minus)
        assert theta_map(k, state.gamma, ham).distance(data.theta0) < 1e-12
    assert trajectory.invariants["theta_drift"].max() < 1e-12


def test_factorization_solution_solves_equations(rng):
    ham = sl2c_h2()
    data = initial_data_from_su2(_unit(rng), rng.uniform(-1.0, 1.0, 3))
    assert derivative_residual(data, ham, [0.2, 0.9, 1.6]) < 1e-6


def test_closed_form_trajectory_rescales_time():
    ham = sl2c_h2()
    data = initial_data_from_su2([0.0, 0.0, 2.0], [0.3, -0.4, 0.1])
    times = np.linspace(0.0, 1.0, 6)
    closed = solve_sl2c_closed_form(data, ham, times)
    generic = solve_by_factorization(data, ham, times)
    deviation = solution_deviation(closed, generic)
    assert max(deviation.values()) < 1e-9


def test_rk4_matches_the_closed_form_within_the_time_budget(rng):
    ham = sl2c_h2()
    times = np.linspace(0.0, 2.0, 21)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(10):
        exact = solve_sl2c_closed_form(initial_data_from_su2(_unit(rng), rng.uniform(-1.0, 1.0, 3)), ham, times)
        state0 = exact.states[0]
        numeric = integrate(factor_flow(state0.base, ham), state0, (0.0, 2.0), 1e-3, len(times))
        worst = max(worst, *solution_deviation(exact, numeric).values())
    elapsed = time.perf_counter() - started
    assert worst <= 1e-6
    assert elapsed <= 10.0


def test_closed_form_frame_along_x3():
    ham = sl2c_h2()
    data = initial_data_from_su2([0.0, 0.0, 1.0], [0.2, 0.5, -0.7])
    trajectory = solve_sl2c_closed_form(data, ham, [1.0])
    base = trajectory.states[0].g_minus.base
    assert base.matrix[0, 0].real == pytest.approx(math.exp(-0.5), abs=1e-14)


def test_initial_data_check():
    ham = quadratic_km(1)
    gamma0 = tower_level(1).element(np.eye(12)[0])
    good = initial_data(gamma0, ham)
    check_initial_data(good, ham)
    with pytest.raises(InitialDataError):
        check_initial_data(AksInitialData(2 * good.theta0, gamma0), ham)
    with pytest.raises(LevelMismatch):
        check_initial_data(good, quadratic_km(2))


def test_initial_data_rejects_bad_su2_input():
    with pytest.raises(InitialDataError):
        initial_data_from_su2([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    with pytest.raises(InitialDataError):
        initial_data_from_su2([1.0, 0.0], [1.0, 0.0, 0.0])


def test_initial_data_rejects_minus_start(rng):
    gamma0 = random_admissible_gamma(rng, 1)
    with pytest.raises(InitialDataError):
        AksInitialData(gamma0, gamma0, random_element(rng, 1, "minus"))


def test_closed_form_needs_su2_data(rng):
    ham = sl2c_h2()
    data = initial_data(tower_level(1).element(rng.uniform(-1.0, 1.0, 12)), ham)
    with pytest.raises(InitialDataError):
        solve_sl2c_closed_form(data, ham, [0.0, 0.1])


def test_zero_generator_gives_constant_solution():
    ham = quadratic_km(1)
    data = initial_data(tower_level(1).zero(), ham)
    trajectory = solve_by_factorization(data, ham, np.linspace(0.0, 1.0, 4))
    for state in trajectory.states:
        np.testing.assert_allclose(flatten(state.h_plus), flatten(identity(1)), atol=1e-12)
        assert state.gamma.norm() == 0.0


def test_theta_is_constant_along_null_directions(rng):
    ham = quadratic_km(1)
    k = random_element(rng, 1, scale=0.5)
    gamma = tower_level(1).element(rng.uniform(-1.0, 1.0, 12))
    assert theta_directional_derivative(k, gamma, ham) < 1e-6


def test_random_admissible_gamma_is_admissible(rng):
    for level in (1, 2):
        gamma = random_admissible_gamma(rng, level)
        assert gamma_character_condition(gamma, tower_level(level))


def test_admissible_gamma_checks_sizes():
    model = tower_level(1)
    count = len(character_space(model.descriptor, model.split.minus_basis_indices))
    minus = len(model.split.minus_basis_indices)
    with pytest.raises(InitialDataError):
        admissible_gamma(np.zeros(count + 1), np.zeros(minus), 1)
    with pytest.raises(InitialDataError):
        admissible_gamma(np.zeros(count), np.zeros(minus - 1), 1)


@pytest.mark.parametrize("level", [1, 2, 3])
def test_tower_levels_project_to_nested_system(rng, level):
    gamma = random_admissible_gamma(rng, level)
    solution = tower_solve(level, gamma, np.arange(5) * tower_spacing(level))
    assert len(solution.nested) == 5
    assert nested_residual(solution) < 1e-6
    assert solution.omega_gamma_defect() < 1e-12


def test_tower_spacing_halves_per_level():
    assert tower_spacing(1) == SAMPLE_FD_SPACING
    assert tower_spacing(3) == SAMPLE_FD_SPACING / 4


def test_nested_residual_needs_even_five_point_windows(rng):
    gamma = random_admissible_gamma(rng, 1)
    with pytest.raises(ValueError, match="five"):
        nested_residual(tower_solve(1, gamma, np.arange(4) * SAMPLE_FD_SPACING))
    uneven = tower_solve(1, gamma, np.array([0.0, 1.0, 2.0, 3.0, 5.0]) * SAMPLE_FD_SPACING)
    with pytest.raises(ValueError, match="evenly"):
        nested_residual(uneven)


@pytest.mark.parametrize("level", [0, 4])
def test_tower_solve_rejects_levels(rng, level):
    with pytest.raises(UnsupportedLevel):
        tower_solve(level, random_admissible_gamma(rng, 1), [0.0])


def test_tower_solve_checks_gamma_level(rng):
    with pytest.raises(LevelMismatch):
        tower_solve(2, random_admissible_gamma(rng, 1), [0.0])
