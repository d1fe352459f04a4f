"""Run scenarios: numerical integration, exact solution and comparison."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .aks_solver import solve_by_factorization, solve_sl2c_closed_form
from .const import CONF_FACTORS, CONF_REPORT, CONF_TRAJECTORY
from .dynamics import Trajectory, collective_flow, factor_flow, integrate
from .exceptions import VerificationFailed
from .formats import (
    compare_tables,
    invariant_summary,
    read_table,
    write_factors,
    write_report,
    write_trajectory,
)
from .scenario import Scenario

_LOGGER = logging.getLogger(__name__)


@dataclass
class RunResult:
    """Files and figures of one run."""

    trajectory: Trajectory
    summary: list[dict]
    paths: dict[str, Path] = field(default_factory=dict)
    deviations: dict[str, float] = field(default_factory=dict)

    @property
    def breaches(self) -> list[dict]:
        return [row for row in self.summary if not row["ok"]]


def _finish(result: RunResult, strict: bool) -> RunResult:
    for row in result.breaches:
        _LOGGER.warning("%s reached %s above the limit %s", row["name"], row["max"], row["limit"])
    if strict and result.breaches:
        keys = ", ".join(row["key"] for row in result.breaches)
        raise VerificationFailed(f"invariant limits breached: {keys}")
    return result


def simulate(scenario: Scenario, out_dir: str | Path, strict: bool = False) -> RunResult:
    """Integrate the scenario with RK4 and write the trajectory and report.

    (h₊, Z) scenarios run the collective equations.  su(2) and Γ scenarios
    start in (Ω, Γ) coordinates and run the factor system, so comparing them
    with solve_aks does not exercise the collective equations.
    """
    out_dir = Path(out_dir)
    ham = scenario.ham()
    state = scenario.initial_state()
    if state.coordinates == "hz":
        system = collective_flow(scenario.base, ham)
    else:
        system = factor_flow(scenario.base, ham)
    trajectory = integrate(system, state, scenario.t_span, scenario.dt, scenario.samples)
    summary = invariant_summary(trajectory, exact=False)
    result = RunResult(trajectory, summary)
    result.paths["trajectory"] = write_trajectory(out_dir / scenario.outputs[CONF_TRAJECTORY], trajectory)
    result.paths["report"] = write_report(out_dir / scenario.outputs[CONF_REPORT], summary, scenario.name)
    return _finish(result, strict)


def solve_aks(
    scenario: Scenario,
    out_dir: str | Path,
    strict: bool = False,
    compare: str | Path | None = None,
) -> RunResult:
    """Solve the scenario by factorization and write trajectory, factors and report.

    The explicit SL(2,C) factors are used when the scenario gives su(2) data
    for the sl(2,C) hamiltonian.
    """
    out_dir = Path(out_dir)
    ham = scenario.ham()
    data = scenario.aks_data()
    if data.x0_plus is not None and ham.kind == "sl2c_h2":
        trajectory = solve_sl2c_closed_form(data, ham, scenario.times, scenario.base)
    else:
        trajectory = solve_by_factorization(data, ham, scenario.times, scenario.base)
    summary = invariant_summary(trajectory, exact=True)
    result = RunResult(trajectory, summary)
    result.paths["trajectory"] = write_trajectory(out_dir / scenario.outputs[CONF_TRAJECTORY], trajectory)
    result.paths["factors"] = write_factors(out_dir / scenario.outputs[CONF_FACTORS], trajectory)
    result.paths["report"] = write_report(out_dir / scenario.outputs[CONF_REPORT], summary, scenario.name)
    if compare is not None:
        result.deviations = compare_files(result.paths["trajectory"], compare)
    return _finish(result, strict)


def compare_files(first: str | Path, second: str | Path) -> dict[str, float]:
    """Return the maximum deviation per column group of two trajectory files."""
    deviations = compare_tables(read_table(first), read_table(second))
    for group, value in deviations.items():
        _LOGGER.info("Max deviation in %s: %s", group, value)
    return deviations
