"""Tests for fibers, Dirac brackets and the plus group Poisson structure."""

from __future__ import annotations

import logging

import numpy as np
import pytest

from semidirect_aks.brackets import (
    FiberBasePoint,
    Observable,
    Tangent,
    bracket_observable,
    canonical_poisson,
    dirac_bracket,
    dirac_bracket_sl2c,
    dressing_antihomomorphism_defect,
    dressing_flow_defect,
    dressing_hamiltonian,
    dressing_hamiltonian_defect,
    dressing_vector,
    dressing_vector_by_factorization,
    fiber_projection,
    jacobi_defect,
    lie_poisson,
    linear_observable,
    magnetic_jacobian,
    momentum_bracket_defect,
    momentum_function,
    monopole_density,
    monopole_density_trace,
    phase_point,
    phi_b,
    phi_x,
    pl_bivector,
    pl_bivector_blocks,
    reciprocal_dressing,
    reciprocal_dressing_by_factorization,
    register_observable,
    require_on_fiber,
    symplectic_form,
    symplectic_form_plus,
    theta_momentum,
    trace_observable,
)
from semidirect_aks.exceptions import (
    DifferentialMismatch,
    GroupInvariantViolation,
    OffFiberError,
    SubalgebraMembershipError,
)
from semidirect_aks.lie_core import bracket, pairing
from semidirect_aks.matrix_group import (
    GroupElement,
    coadjoint,
    flatten,
    group_inverse,
    group_mul,
    identity,
    random_element,
)
from semidirect_aks.sl2c_model import build_model, from_su2_vector, tower_level


def _b(a, b, c):
    return GroupElement(np.array([[a, complex(b, c)], [0.0, 1.0 / a]]), "minus")


@pytest.fixture
def fiber(rng):
    """A level 0 base point and a point on its fiber."""
    model = tower_level(0)
    base = FiberBasePoint(_b(1.3, 0.4, -0.2), model.zero())
    h_plus = random_element(rng, 0, "plus")
    z_plus = model.project(model.element(rng.uniform(-1.0, 1.0, 6)), "plus")
    return base, base.point(h_plus, z_plus), h_plus, z_plus


def test_identity_base_satisfies_character_condition():
    assert FiberBasePoint.identity(1).character_condition()


def test_character_condition_warning(caplog):
    model = build_model()
    with caplog.at_level(logging.WARNING, logger="semidirect_aks.brackets"):
        base = FiberBasePoint(identity(0, "minus"), model.basis("E"))
    assert not base.character_condition()
    assert "not a character" in caplog.text


def test_h_direction_is_a_character(caplog):
    model = build_model()
    with caplog.at_level(logging.WARNING, logger="semidirect_aks.brackets"):
        base = FiberBasePoint(_b(2.0, 0.5, 0.5), 0.7 * model.basis("H"))
    assert base.character_condition()
    assert caplog.text == ""


def test_base_point_validation():
    model = build_model()
    with pytest.raises(SubalgebraMembershipError):
        FiberBasePoint(identity(0, "minus"), model.basis("X1"))
    with pytest.raises(GroupInvariantViolation):
        FiberBasePoint(identity(0, "plus"), model.zero())


def test_fiber_coordinates_round_trip(fiber):
    base, point, h_plus, z_plus = fiber
    found_h, found_z = base.fiber_coordinates(point)
    assert np.allclose(flatten(found_h), flatten(h_plus), atol=1e-12)
    assert found_z.distance(z_plus) < 1e-14


def test_fiber_projection_recovers_base(fiber):
    base, point, _, _ = fiber
    projected = fiber_projection(point)
    assert np.allclose(projected.h_minus.matrix, base.h_minus.matrix, atol=1e-12)
    assert projected.z_minus.distance(base.z_minus) < 1e-14


def test_point_off_fiber(fiber):
    _, point, _, _ = fiber
    with pytest.raises(OffFiberError):
        require_on_fiber(point, FiberBasePoint(_b(0.7, 0.0, 0.0), tower_level(0).zero()))


def test_dirac_bracket_is_antisymmetric(rng, fiber):
    base, point, _, _ = fiber
    model = tower_level(0)
    f = linear_observable(model.element(rng.uniform(-1.0, 1.0, 6)))
    g = momentum_function(model.element(rng.uniform(-1.0, 1.0, 6)))
    assert abs(dirac_bracket(f, g, point, base) + dirac_bracket(g, f, point, base)) < 1e-12
    assert dirac_bracket(f, f, point, base) == pytest.approx(0.0, abs=1e-12)


def test_dirac_bracket_at_identity_is_lie_poisson(rng):
    model = tower_level(0)
    base = FiberBasePoint.identity(0)
    z_plus = model.project(model.element(rng.uniform(-1.0, 1.0, 6)), "plus")
    point = base.point(identity(0, "plus"), z_plus)
    f = linear_observable(model.element(rng.uniform(-1.0, 1.0, 6)))
    g = linear_observable(model.element(rng.uniform(-1.0, 1.0, 6)))
    assert dirac_bracket(f, g, point, base) == pytest.approx(lie_poisson(f, g, point), abs=1e-10)


def test_monopole_fast_path(rng, fiber):
    base, point, _, _ = fiber
    f = linear_observable(from_su2_vector(rng.uniform(-1.0, 1.0, 3)))
    g = linear_observable(from_su2_vector(rng.uniform(-1.0, 1.0, 3)))
    assert dirac_bracket_sl2c(f, g, point, base) == pytest.approx(dirac_bracket(f, g, point, base), abs=1e-8)


@pytest.mark.parametrize(
    ("a", "b", "c", "expected"),
    [(1.0, 0.0, 0.0, 0.0), (2.0, 0.0, 0.0, 15 / 16), (1.0, 1.0, 0.0, -1.0)],
)
def test_monopole_density_values(a, b, c, expected):
    assert monopole_density(_b(a, b, c)) == pytest.approx(expected, abs=1e-14)


def test_monopole_density_trace_formula(rng):
    for _ in range(20):
        h = _b(rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))
        assert monopole_density_trace(h) == pytest.approx(monopole_density(h), abs=1e-12)


def test_exact_differentials_agree_with_finite_differences(rng, fiber):
    _, point, _, _ = fiber
    model = tower_level(0)
    observable = momentum_function(model.element(rng.uniform(-1.0, 1.0, 6)))
    assert register_observable(observable, [point]) is observable


def test_wrong_differential_is_rejected(rng, fiber):
    _, point, _, _ = fiber
    model = tower_level(0)
    good = linear_observable(model.element(rng.uniform(-1.0, 1.0, 6)))
    wrong = Observable(good.evaluate, momentum_function(model.basis("X1")).differential, name="wrong")
    with pytest.raises(DifferentialMismatch):
        register_observable(wrong, [point])


def test_symplectic_form_is_antisymmetric(rng, fiber):
    _, point, _, _ = fiber
    model = tower_level(0)

    def tangent():
        return Tangent(model.element(rng.uniform(-1.0, 1.0, 6)), model.element(rng.uniform(-1.0, 1.0, 6)))

    v, w = tangent(), tangent()
    assert symplectic_form(point, v, w) == pytest.approx(-symplectic_form(point, w, v), abs=1e-14)


def test_pl_bivector_block_expansion(rng):
    upper = tower_level(1)
    for _ in range(5):
        point = random_element(rng, 1, "plus", scale=0.5)
        xi = upper.gamma(upper.project(upper.element(rng.uniform(-1.0, 1.0, 12)), "minus"))
        eta = upper.gamma(upper.project(upper.element(rng.uniform(-1.0, 1.0, 12)), "minus"))
        assert pl_bivector(point, xi, eta) == pytest.approx(pl_bivector_blocks(point, xi, eta), abs=1e-10)


def test_pl_bivector_needs_plus_point(rng):
    upper = tower_level(1)
    xi = upper.gamma(upper.project(upper.element(rng.uniform(-1.0, 1.0, 12)), "minus"))
    with pytest.raises(GroupInvariantViolation):
        pl_bivector(random_element(rng, 1, "minus", scale=0.5), xi, xi)


def test_dressing_vector_matches_factorization(rng):
    upper = tower_level(1)
    point = random_element(rng, 1, "plus", scale=0.5)
    x_minus = upper.project(upper.element(rng.uniform(-1.0, 1.0, 12)), "minus")
    formula = dressing_vector(x_minus, point)
    numeric = dressing_vector_by_factorization(x_minus, point, step=1e-5)
    assert (formula - numeric).norm() < 1e-5


def test_reciprocal_dressing_matches_factorization(rng):
    upper = tower_level(1)
    point = random_element(rng, 1, "minus", scale=0.5)
    xi_plus = upper.project(upper.element(rng.uniform(-1.0, 1.0, 12)), "plus")
    formula = reciprocal_dressing(xi_plus, point)
    numeric = reciprocal_dressing_by_factorization(xi_plus, point, step=1e-5)
    assert (formula - numeric).norm() < 1e-5


def test_trace_observable_differential(rng):
    matrix = rng.uniform(-1.0, 1.0, (2, 2)) + 1j * rng.uniform(-1.0, 1.0, (2, 2))
    model = tower_level(0)
    point = phase_point(random_element(rng, 0), model.element(rng.uniform(-1.0, 1.0, 6)))
    observable = trace_observable(matrix)
    assert register_observable(observable, [point]) is observable
    assert observable(point) == pytest.approx(np.trace(matrix @ point.base.matrix).real)


def test_canonical_poisson_is_antisymmetric(rng, fiber):
    _, point, _, _ = fiber
    model = tower_level(0)
    f = linear_observable(model.element(rng.uniform(-1.0, 1.0, 6)))
    g = momentum_function(model.element(rng.uniform(-1.0, 1.0, 6)))
    assert canonical_poisson(f, g, point) == pytest.approx(-canonical_poisson(g, f, point), abs=1e-12)
    assert canonical_poisson(g, g, point) == pytest.approx(0.0, abs=1e-12)


def _plus_point(rng, model):
    return phase_point(random_element(rng, 0, "plus"), model.project(model.element(rng.uniform(-1.0, 1.0, 6)), "plus"))


def _plus_tangent(rng, model):
    return Tangent(
        model.project(model.element(rng.uniform(-1.0, 1.0, 6)), "plus"),
        model.project(model.element(rng.uniform(-1.0, 1.0, 6)), "plus"),
    )


def test_symplectic_form_plus(rng):
    model = tower_level(0)
    point = _plus_point(rng, model)
    v, w = _plus_tangent(rng, model), _plus_tangent(rng, model)
    assert symplectic_form_plus(point, v, w) == symplectic_form(point, v, w)
    with pytest.raises(SubalgebraMembershipError):
        symplectic_form_plus(point, Tangent(model.basis("E"), model.zero()), w)


def test_dressing_flow_defect_is_antisymmetric_and_generic(rng):
    model = tower_level(0)
    point = _plus_point(rng, model)
    w_minus = model.project(model.element(rng.uniform(-1.0, 1.0, 6)), "minus")
    v, w = _plus_tangent(rng, model), _plus_tangent(rng, model)
    forward = dressing_flow_defect(point, w_minus, v, w)
    assert forward == pytest.approx(-dressing_flow_defect(point, w_minus, w, v), abs=1e-14)
    assert abs(forward) > 1e-8


def test_dressing_hamiltonian_differential(rng):
    model = tower_level(0)
    point = _plus_point(rng, model)
    x_minus = model.project(model.element(rng.uniform(-1.0, 1.0, 6)), "minus")
    observable = dressing_hamiltonian(x_minus)
    assert register_observable(observable, [point]) is observable


def test_dressing_hamiltonian_defect_values():
    model = build_model()
    at_zero = phase_point(identity(0, "plus"), model.zero())
    assert dressing_hamiltonian_defect(at_zero, model.basis("H")) == pytest.approx(0.0, abs=1e-14)
    # the σ pairing is not ad-invariant, so the dressing field is not hamiltonian for θ
    point = phase_point(identity(0, "plus"), model.basis("X1"))
    assert dressing_hamiltonian_defect(point, model.basis("H")) == pytest.approx(0.5, abs=1e-12)


def test_momentum_bracket_defect(rng, fiber):
    base, point, _, z_plus = fiber
    model = tower_level(0)
    x = model.element(rng.uniform(-1.0, 1.0, 6))
    y = model.element(rng.uniform(-1.0, 1.0, 6))
    assert momentum_bracket_defect(x, y, point, base) == pytest.approx(
        -momentum_bracket_defect(y, x, point, base), abs=1e-14
    )
    at_identity = base.point(identity(0, "plus"), z_plus)
    x_plus, y_plus = model.project(x, "plus"), model.project(y, "plus")
    assert momentum_bracket_defect(x_plus, y_plus, at_identity, base) == pytest.approx(0.0, abs=1e-14)


def test_phi_b_at_identity_and_equivariance(rng):
    model = tower_level(0)
    z = model.element(rng.uniform(-1.0, 1.0, 6))
    at_identity = phi_b(phase_point(identity(0), z))
    np.testing.assert_allclose(at_identity.coefficients, model.sigma(z).coefficients, atol=1e-14)
    point = phase_point(random_element(rng, 0, scale=0.5), z)
    g = random_element(rng, 0, scale=0.5)
    moved = phi_b(phase_point(group_mul(g, point.base), z))
    expected = coadjoint(group_inverse(g), phi_b(point))
    np.testing.assert_allclose(moved.coefficients, expected.coefficients, atol=1e-10)


def test_phi_x_is_the_momentum_function(rng):
    model = tower_level(0)
    x = model.element(rng.uniform(-1.0, 1.0, 6))
    z = model.element(rng.uniform(-1.0, 1.0, 6))
    assert phi_x(phase_point(identity(0), z), x) == pytest.approx(model.sigma_pair(z, x), abs=1e-14)
    point = phase_point(random_element(rng, 0, scale=0.5), z)
    assert phi_x(point, x) == momentum_function(x)(point)


def test_theta_momentum_lives_on_the_minus_algebra(rng):
    model = tower_level(0)
    point = _plus_point(rng, model)
    theta = theta_momentum(point)
    for label in ("X1", "X2", "X3"):
        assert abs(pairing(theta, model.basis(label))) < 1e-14
    at_identity = theta_momentum(phase_point(identity(0, "plus"), point.fiber))
    expected = model.gamma(model.project(model.gamma_inverse(model.sigma(point.fiber)), "plus"))
    np.testing.assert_allclose(at_identity.coefficients, expected.coefficients, atol=1e-14)


def test_magnetic_jacobian_is_symmetric_with_the_density_as_trace(rng):
    for _ in range(20):
        h = _b(rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))
        jacobian = magnetic_jacobian(h)
        assert np.array_equal(jacobian, jacobian.T)
        assert np.trace(jacobian) == monopole_density(h)


def test_bracket_observable_is_the_dirac_bracket(rng, fiber):
    base, point, _, _ = fiber
    model = tower_level(0)
    f = linear_observable(model.element(rng.uniform(-1.0, 1.0, 6)))
    g = linear_observable(model.element(rng.uniform(-1.0, 1.0, 6)))
    nested = bracket_observable(f, g, base)
    assert nested.differential is None
    assert nested.left_invariant
    assert nested(point) == dirac_bracket(f, g, point, base)


def test_dirac_bracket_satisfies_jacobi_on_linear_observables(rng):
    model = tower_level(0)
    for _ in range(5):
        base = FiberBasePoint(_b(rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)), model.zero())
        z_plus = model.project(model.element(rng.uniform(-1.0, 1.0, 6)), "plus")
        point = base.point(random_element(rng, 0, "plus"), z_plus)
        f, g, k = (linear_observable(model.element(rng.uniform(-1.0, 1.0, 6))) for _ in range(3))
        assert abs(dirac_bracket(f, g, point, base)) > 0.0
        assert jacobi_defect(f, g, k, point, base) < 1e-6


def test_dressing_fields_reverse_brackets_on_the_plus_group(rng):
    upper = tower_level(1)
    point = random_element(rng, 1, "plus", scale=0.5)
    xi, xi2 = (upper.project(upper.element(rng.uniform(-1.0, 1.0, 12)), "minus") for _ in range(2))
    assert dressing_vector(bracket(xi, xi2), point).norm() > 1e-3
    assert dressing_antihomomorphism_defect(xi, xi2, point) < 1e-4


def test_reciprocal_dressing_fields_keep_brackets_on_the_minus_group(rng):
    upper = tower_level(1)
    point = random_element(rng, 1, "minus", scale=0.5)
    xi, xi2 = (upper.project(upper.element(rng.uniform(-1.0, 1.0, 12)), "plus") for _ in range(2))
    assert reciprocal_dressing(bracket(xi, xi2), point).norm() > 1e-3
    assert dressing_antihomomorphism_defect(xi, xi2, point) < 1e-4


def test_dressing_bracket_relation_needs_a_tagged_point(rng):
    upper = tower_level(1)
    xi = upper.project(upper.element(rng.uniform(-1.0, 1.0, 12)), "minus")
    with pytest.raises(GroupInvariantViolation):
        dressing_antihomomorphism_defect(xi, xi, random_element(rng, 1, scale=0.5))


def test_tangent_flat_round_trip(rng):
    model = tower_level(0)
    point = _plus_point(rng, model)
    v = _plus_tangent(rng, model)
    assert (Tangent.from_flat(point, v.to_flat(point)) - v).norm() < 1e-12
