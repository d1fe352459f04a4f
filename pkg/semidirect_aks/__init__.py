"""Integrable systems on semidirect products solved by factorization."""

from __future__ import annotations

from .aks_solver import initial_data, solve_by_factorization, solve_sl2c_closed_form, tower_solve
from .dynamics import collective_flow, factor_flow, hamiltonian_by_name, initial_state, integrate
from .scenario import load_scenario, parse_scenario
from .sl2c_model import build_model, tower_level

__all__ = [
    "build_model",
    "collective_flow",
    "factor_flow",
    "hamiltonian_by_name",
    "initial_data",
    "initial_state",
    "integrate",
    "load_scenario",
    "parse_scenario",
    "solve_by_factorization",
    "solve_sl2c_closed_form",
    "tower_level",
    "tower_solve",
]
