"""Verification suites reporting measured residuals against their limits."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aks_solver import (
    ad_power,
    closed_form_deviation,
    derivative_residual,
    initial_data_from_su2,
    nested_residual,
    random_admissible_gamma,
    solution_deviation,
    solve_by_factorization,
    solve_sl2c_closed_form,
    theta_map,
    tower_solve,
    tower_spacing,
)
from .brackets import (
    FiberBasePoint,
    dirac_bracket,
    dirac_bracket_sl2c,
    dressing_antihomomorphism_defect,
    dressing_vector,
    dressing_vector_by_factorization,
    jacobi_defect,
    lie_poisson,
    linear_observable,
    magnetic_jacobian,
    momentum_function,
    monopole_density,
    monopole_density_trace,
    pl_bivector,
    pl_bivector_blocks,
)
from .const import DEFAULT_SEED, MAX_TOWER_LEVEL, VERIFY_SUITES
from .dynamics import (
    PhaseState,
    factor_flow,
    forms_disagreement,
    integrate,
    legendre_residual,
    quadratic_km,
    rk4_solve,
    sl2c_h2,
)
from .exceptions import InvalidStructure
from .formats import read_descriptor
from .lie_core import (
    antisymmetry_residual,
    invariance_residual,
    jacobi_residual,
    splitting_residual,
)
from .matrix_group import (
    GroupElement,
    adjoint,
    factorize,
    flatten,
    group_mul,
    identity,
    projector_A,
    random_element,
)
from .sl2c_model import (
    adjoint_b_closed_form,
    build_model,
    from_su2_vector,
    projector_b_closed_form,
    tower_level,
)

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    """One measured property."""

    suite: str
    name: str
    value: float
    limit: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(math.isfinite(self.value) and self.value <= self.limit)


def _random_b(rng: np.random.Generator) -> tuple[float, float, float]:
    return float(rng.uniform(0.5, 2.0)), float(rng.uniform(-1.0, 1.0)), float(rng.uniform(-1.0, 1.0))


def _b_element(a: float, b: float, c: float) -> GroupElement:
    return GroupElement(np.array([[a, complex(b, c)], [0.0, 1.0 / a]]), "minus")


# Algebra ===============================================================================


def descriptor_checks(path: str | Path) -> list[CheckResult]:
    """Check a descriptor file; offending index tuples go into the detail."""
    try:
        descriptor, form, split = read_descriptor(path)
    except InvalidStructure as err:
        return [CheckResult("algebra", "descriptor file", math.inf, 0.0, str(err))]
    results = []
    value, where = antisymmetry_residual(descriptor)
    results.append(CheckResult("algebra", "antisymmetry", value, 1e-12, f"at {where}"))
    value, where = jacobi_residual(descriptor)
    results.append(CheckResult("algebra", "jacobi", value, 1e-12, f"at {where}"))
    if form is not None and form.ad_invariant:
        value, where = invariance_residual(form)
        results.append(CheckResult("algebra", "form ad-invariance", value, 1e-12, f"at {where}"))
    if form is not None and split is not None:
        value, label = splitting_residual(descriptor, form, split)
        results.append(CheckResult("algebra", "splitting", value, 1e-12, label))
    return results


def algebra_suite(rng: np.random.Generator, descriptor: str | Path | None = None) -> list[CheckResult]:
    if descriptor is not None:
        return descriptor_checks(descriptor)
    results = []
    for level in range(3):
        model = tower_level(level)
        value, where = antisymmetry_residual(model.descriptor)
        results.append(CheckResult("algebra", f"antisymmetry level {level}", value, 0.0, f"at {where}"))
        value, where = jacobi_residual(model.descriptor)
        results.append(CheckResult("algebra", f"jacobi level {level}", value, 1e-12, f"at {where}"))
        value, label = splitting_residual(model.descriptor, model.form, model.split)
        results.append(CheckResult("algebra", f"splitting level {level}", value, 1e-12, label))
    model = tower_level(0)
    value, where = invariance_residual(model.form)
    results.append(CheckResult("algebra", "k0 ad-invariance on the basis", value, 1e-12, f"at {where}"))
    worst = 0.0
    for _ in range(100):
        g = random_element(rng, 0)
        x = model.element(rng.uniform(-1.0, 1.0, 6))
        y = model.element(rng.uniform(-1.0, 1.0, 6))
        worst = max(worst, abs(model.k(adjoint(g, x), adjoint(g, y)) - model.k(x, y)))
    results.append(CheckResult("algebra", "k0 Ad-invariance", worst, 1e-10))
    return results


# Groups ================================================================================


def groups_suite(rng: np.random.Generator) -> list[CheckResult]:
    results = []
    worst = 0.0
    for _ in range(1000):
        g = random_element(rng, 0)
        u, b = factorize(g)
        worst = max(worst, float(np.max(np.abs(u.matrix @ b.matrix - g.matrix))))
    results.append(CheckResult("groups", "iwasawa round trip", worst, 1e-12))
    model = build_model()
    adjoint_worst = projector_worst = 0.0
    for _ in range(100):
        a, b, c = _random_b(rng)
        h = _b_element(a, b, c)
        x = model.element(rng.uniform(-1.0, 1.0, 6))
        adjoint_worst = max(adjoint_worst, adjoint(h, x).distance(adjoint_b_closed_form(a, b, c, x)))
        for side in ("plus", "minus"):
            closed = projector_b_closed_form(a, b, c, x, side)
            projector_worst = max(projector_worst, projector_A(h, side, x).distance(closed))
    results.append(CheckResult("groups", "Ad on B closed form", adjoint_worst, 1e-12))
    results.append(CheckResult("groups", "projectors on B closed form", projector_worst, 1e-12))
    for level in (1, 2):
        worst = 0.0
        for _ in range(20):
            g = random_element(rng, level, scale=0.5)
            plus, minus = factorize(g)
            worst = max(worst, float(np.max(np.abs(flatten(group_mul(plus, minus)) - flatten(g)))))
        results.append(CheckResult("groups", f"semidirect factorization level {level}", worst, 1e-10))
    return results


# Brackets ==============================================================================


def brackets_suite(rng: np.random.Generator) -> list[CheckResult]:
    results = []
    model = tower_level(0)
    antisymmetry = lie_poisson_gap = fast_path_gap = jacobi = 0.0
    for _ in range(20):
        a, b, c = _random_b(rng)
        base = FiberBasePoint(_b_element(a, b, c), model.zero())
        h_plus = random_element(rng, 0, "plus")
        z_plus = model.project(model.element(rng.uniform(-1.0, 1.0, 6)), "plus")
        point = base.point(h_plus, z_plus)
        f = linear_observable(model.element(rng.uniform(-1.0, 1.0, 6)))
        g = momentum_function(model.element(rng.uniform(-1.0, 1.0, 6)))
        antisymmetry = max(antisymmetry, abs(dirac_bracket(f, g, point, base) + dirac_bracket(g, f, point, base)))
        linear = [linear_observable(model.element(rng.uniform(-1.0, 1.0, 6))) for _ in range(3)]
        jacobi = max(jacobi, jacobi_defect(*linear, point, base))
        left = linear_observable(model.element(rng.uniform(-1.0, 1.0, 6)))
        first_su2 = linear_observable(from_su2_vector(rng.uniform(-1.0, 1.0, 3)))
        second_su2 = linear_observable(from_su2_vector(rng.uniform(-1.0, 1.0, 3)))
        fast_path_gap = max(
            fast_path_gap,
            abs(
                dirac_bracket(first_su2, second_su2, point, base)
                - dirac_bracket_sl2c(first_su2, second_su2, point, base)
            ),
        )
        identity_base = FiberBasePoint.identity(0)
        plain = identity_base.point(identity(0, "plus"), z_plus)
        lie_poisson_gap = max(
            lie_poisson_gap, abs(dirac_bracket(f, left, plain, identity_base) - lie_poisson(f, left, plain))
        )
    results.append(CheckResult("brackets", "dirac antisymmetry", antisymmetry, 1e-12))
    results.append(CheckResult("brackets", "dirac jacobi on linear observables", jacobi, 1e-6))
    results.append(CheckResult("brackets", "left invariant dirac vs lie-poisson", lie_poisson_gap, 1e-10))
    results.append(CheckResult("brackets", "monopole fast path", fast_path_gap, 1e-8))
    density_gap = abs(monopole_density(_b_element(2.0, 0.0, 0.0)) - 15 / 16)
    results.append(CheckResult("brackets", "monopole density a=2", density_gap, 1e-12))
    density_gap = abs(monopole_density(_b_element(1.0, 1.0, 0.0)) + 1.0)
    results.append(CheckResult("brackets", "monopole density a=b=1", density_gap, 1e-12))
    density_gap = 0.0
    for _ in range(50):
        h = _b_element(*_random_b(rng))
        density_gap = max(density_gap, abs(monopole_density(h) - monopole_density_trace(h)))
    results.append(CheckResult("brackets", "monopole density trace formula", density_gap, 1e-12))
    magnetic_gap = 0.0
    for _ in range(20):
        h = _b_element(*_random_b(rng))
        jacobian = magnetic_jacobian(h)
        asymmetry = float(np.max(np.abs(jacobian - jacobian.T)))
        magnetic_gap = max(magnetic_gap, asymmetry, float(abs(np.trace(jacobian) - monopole_density(h))))
    results.append(CheckResult("brackets", "magnetic jacobian symmetry and trace", magnetic_gap, 0.0))
    upper = tower_level(1)
    bivector_gap = dressing_gap = 0.0
    for index in range(100):
        point = random_element(rng, 1, "plus", scale=0.5)
        xi = upper.gamma(upper.project(upper.element(rng.uniform(-1.0, 1.0, 12)), "minus"))
        eta = upper.gamma(upper.project(upper.element(rng.uniform(-1.0, 1.0, 12)), "minus"))
        bivector_gap = max(bivector_gap, abs(pl_bivector(point, xi, eta) - pl_bivector_blocks(point, xi, eta)))
        if index < 20:
            x_minus = upper.project(upper.element(rng.uniform(-1.0, 1.0, 12)), "minus")
            formula = dressing_vector(x_minus, point)
            numeric = dressing_vector_by_factorization(x_minus, point, step=1e-5)
            dressing_gap = max(dressing_gap, (formula - numeric).norm())
    results.append(CheckResult("brackets", "poisson-lie bivector blocks", bivector_gap, 1e-10))
    results.append(CheckResult("brackets", "dressing vector vs factorization", dressing_gap, 1e-5))
    gaps = {"plus": 0.0, "minus": 0.0}
    for _ in range(20):
        for side, algebra_side in (("plus", "minus"), ("minus", "plus")):
            xi, xi2 = (upper.project(upper.element(rng.uniform(-1.0, 1.0, 12)), algebra_side) for _ in range(2))
            point = random_element(rng, 1, side, scale=0.5)
            gaps[side] = max(gaps[side], dressing_antihomomorphism_defect(xi, xi2, point))
    results.append(CheckResult("brackets", "dressing fields reverse brackets on H+", gaps["plus"], 1e-4))
    results.append(CheckResult("brackets", "reciprocal dressing fields keep brackets on H-", gaps["minus"], 1e-4))
    return results


# Dynamics ==============================================================================


def rk4_order(dts=(1e-2, 5e-3, 2.5e-3), t_end: float = 1.0) -> float:
    """Return the measured convergence order on y' = Ay with a damped rotation."""
    matrix = np.array([[-0.5, 2.0], [-2.0, -0.5]])
    y0 = np.array([1.0, 0.0])
    exact = np.exp(-0.5 * t_end) * np.array([math.cos(2.0 * t_end), -math.sin(2.0 * t_end)])
    errors = []
    for dt in dts:
        values = rk4_solve(lambda t, y: matrix @ y, y0, np.array([0.0, t_end]), dt)
        errors.append(float(np.max(np.abs(values[-1] - exact))))
    rates = [math.log(errors[i] / errors[i + 1]) / math.log(dts[i] / dts[i + 1]) for i in range(len(dts) - 1)]
    return min(rates)


def dynamics_suite(rng: np.random.Generator) -> list[CheckResult]:
    results = [CheckResult("dynamics", "rk4 observed order shortfall", 3.9 - rk4_order(), 0.0)]
    ham = sl2c_h2()
    model = ham.model
    worst = 0.0
    for _ in range(5):
        eta = model.coelement(rng.uniform(-1.0, 1.0, model.dim))
        worst = max(worst, legendre_residual(ham, eta))
    results.append(CheckResult("dynamics", "sl2c_h2 legendre transform", worst, 1e-8))
    base = FiberBasePoint.identity(1)
    disagreement = 0.0
    quadratic = quadratic_km(1)
    for _ in range(10):
        gamma = random_admissible_gamma(rng, 1)
        state = PhaseState(base, identity(1, "plus"), omega=quadratic.omega(gamma), gamma=gamma)
        disagreement = max(disagreement, forms_disagreement(state))
    results.append(CheckResult("dynamics", "three forms under the character condition", disagreement, 1e-10))
    return results


# AKS ===================================================================================


def aks_suite(rng: np.random.Generator) -> list[CheckResult]:
    results = []
    worst = 0.0
    for _ in range(50):
        x = rng.normal(size=3)
        x /= np.linalg.norm(x)
        worst = max(worst, closed_form_deviation(x, rng.uniform(-1.0, 1.0, 3), float(rng.uniform(-2.0, 2.0))))
    results.append(CheckResult("aks", "closed form vs generic factorization", worst, 1e-10))
    model = build_model()
    power_gap = 0.0
    for n in range(9):
        x = rng.normal(size=3)
        x /= np.linalg.norm(x)
        big_x = model.element(np.concatenate([x, np.zeros(3)]))
        big_y = model.element(np.concatenate([rng.uniform(-1.0, 1.0, 3), np.zeros(3)]))
        brute = ad_power(big_x, big_y, n)
        power_gap = max(power_gap, brute.distance(ad_power(big_x, big_y, n, closed_form=True)) / max(1.0, brute.norm()))
    results.append(CheckResult("aks", "ad power closed form", power_gap, 1e-12))
    ham = sl2c_h2()
    x = rng.normal(size=3)
    data = initial_data_from_su2(x / np.linalg.norm(x), rng.uniform(-1.0, 1.0, 3))
    times = np.linspace(0.0, 2.0, 11)
    trajectory = solve_by_factorization(data, ham, times)
    drift = max(
        theta_map(group_mul(state.h_plus, state.g_minus), state.gamma, ham).distance(data.theta0)
        for state in trajectory.states
    )
    results.append(CheckResult("aks", "theta constancy", drift, 1e-12))
    results.append(CheckResult("aks", "form2 residual", derivative_residual(data, ham, times[1:-1:3]), 1e-6))
    exact = solve_sl2c_closed_form(data, ham, times)
    numeric = integrate(factor_flow(exact.states[0].base, ham), exact.states[0], (0.0, 2.0), 1e-3, len(times))
    results.append(CheckResult("aks", "rk4 vs closed form", max(solution_deviation(exact, numeric).values()), 1e-6))
    for level in range(1, MAX_TOWER_LEVEL + 1):
        gamma = random_admissible_gamma(rng, level)
        solution = tower_solve(level, gamma, np.arange(5) * tower_spacing(level))
        results.append(CheckResult("aks", f"level {level} nested residual", nested_residual(solution), 1e-6))
        results.append(CheckResult("aks", f"level {level} quadratic Ω − Γ", solution.omega_gamma_defect(), 1e-12))
    return results


SUITES: dict[str, Callable[..., list[CheckResult]]] = {
    "algebra": algebra_suite,
    "groups": groups_suite,
    "brackets": brackets_suite,
    "dynamics": dynamics_suite,
    "aks": aks_suite,
}


def run_suite(name: str, seed: int = DEFAULT_SEED, descriptor: str | Path | None = None) -> list[CheckResult]:
    """Run one suite or all of them, each with a generator seeded from seed."""
    if name not in VERIFY_SUITES:
        raise ValueError(f"unknown suite {name!r}")
    names = list(SUITES) if name == "all" else [name]
    results: list[CheckResult] = []
    for suite in names:
        rng = np.random.default_rng(seed)
        if suite == "algebra":
            found = algebra_suite(rng, descriptor)
        else:
            found = SUITES[suite](rng)
        failures = sum(not result.passed for result in found)
        _LOGGER.info("Suite %s finished: %s checks, %s failures", suite, len(found), failures)
        results.extend(found)
    return results


def format_results(results: list[CheckResult]) -> list[str]:
    lines = []
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        detail = f" ({result.detail})" if result.detail else ""
        lines.append(f"{status} {result.suite}: {result.name} = {result.value:.3e} (limit {result.limit:.1e}){detail}")
    return lines

