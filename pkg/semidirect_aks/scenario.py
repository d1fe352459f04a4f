"""Scenario files: schema, validation and construction of initial data."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import voluptuous as vol

from .aks_solver import AksInitialData, initial_data_from_state, initial_data_from_su2
from .brackets import FiberBasePoint
from .const import (
    CONF_A,
    CONF_B,
    CONF_BASE_POINT,
    CONF_C,
    CONF_DT,
    CONF_FACTORS,
    CONF_GAMMA0,
    CONF_H_PLUS,
    CONF_HAMILTONIAN,
    CONF_INITIAL,
    CONF_LEVEL,
    CONF_NAME,
    CONF_OUTPUTS,
    CONF_REPORT,
    CONF_SAMPLES,
    CONF_SEED,
    CONF_T_SPAN,
    CONF_TRAJECTORY,
    CONF_X0_PLUS,
    CONF_Y0_PLUS,
    CONF_Z,
    CONF_Z_MINUS,
    DEFAULT_DT,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    DEFAULT_T_END,
    DEFAULT_T_START,
    FACTORS_FILE,
    RANDOM,
    RANDOM_UNIT,
    REPORT_FILE,
    SCENARIO_HAMILTONIANS,
    SCENARIO_LEVELS,
    TRAJECTORY_FILE,
)
from .dynamics import HamiltonianSpec, PhaseState, hamiltonian_by_name, initial_state
from .exceptions import (
    GroupInvariantViolation,
    InitialDataError,
    LevelMismatch,
    ScenarioError,
    SubalgebraMembershipError,
)
from .lie_core import AlgebraElement
from .matrix_group import (
    AnyGroupElement,
    GroupElement,
    SemidirectGroupElement,
    identity,
    random_element,
    unflatten,
)
from .sl2c_model import tower_level

_LOGGER = logging.getLogger(__name__)

VECTOR = [vol.Coerce(float)]
SU2_VECTOR = vol.All(VECTOR, vol.Length(min=3, max=3))
INITIAL_KEYS = (CONF_H_PLUS, CONF_Z, CONF_X0_PLUS, CONF_Y0_PLUS, CONF_GAMMA0)


def _increasing(value: list[float]) -> list[float]:
    if value[1] <= value[0]:
        raise vol.Invalid("t1 must be larger than t0")
    return value


def _one_initial_kind(value: dict[str, Any]) -> dict[str, Any]:
    if CONF_X0_PLUS in value or CONF_Y0_PLUS in value:
        if CONF_X0_PLUS not in value or CONF_Y0_PLUS not in value:
            raise vol.Invalid("x0_plus and y0_plus come together")
        if CONF_GAMMA0 in value or CONF_Z in value:
            raise vol.Invalid("x0_plus/y0_plus exclude gamma0 and z")
    elif CONF_GAMMA0 in value and CONF_Z in value:
        raise vol.Invalid("gamma0 and z exclude each other")
    return value


BASE_POINT_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_A, default=1.0): vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False)),
        vol.Optional(CONF_B, default=0.0): vol.Coerce(float),
        vol.Optional(CONF_C, default=0.0): vol.Coerce(float),
        vol.Optional(CONF_Z_MINUS): VECTOR,
    }
)

INITIAL_SCHEMA = vol.All(
    vol.Schema(
        {
            vol.Optional(CONF_H_PLUS): vol.Any(RANDOM, VECTOR),
            vol.Optional(CONF_Z): vol.Any(RANDOM, VECTOR),
            vol.Optional(CONF_X0_PLUS): vol.Any(RANDOM_UNIT, SU2_VECTOR),
            vol.Optional(CONF_Y0_PLUS): vol.Any(RANDOM, SU2_VECTOR),
            vol.Optional(CONF_GAMMA0): vol.Any(RANDOM, VECTOR),
        }
    ),
    _one_initial_kind,
)

OUTPUTS_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_TRAJECTORY, default=TRAJECTORY_FILE): str,
        vol.Optional(CONF_REPORT, default=REPORT_FILE): str,
        vol.Optional(CONF_FACTORS, default=FACTORS_FILE): str,
    }
)

SCENARIO_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_NAME): str,
        vol.Required(CONF_LEVEL): vol.In(SCENARIO_LEVELS),
        vol.Required(CONF_HAMILTONIAN): vol.In(SCENARIO_HAMILTONIANS),
        vol.Optional(CONF_BASE_POINT, default={}): BASE_POINT_SCHEMA,
        vol.Required(CONF_INITIAL): INITIAL_SCHEMA,
        vol.Optional(CONF_T_SPAN, default=[DEFAULT_T_START, DEFAULT_T_END]): vol.All(
            VECTOR, vol.Length(min=2, max=2), _increasing
        ),
        vol.Optional(CONF_DT, default=DEFAULT_DT): vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False)),
        vol.Optional(CONF_SAMPLES, default=DEFAULT_SAMPLES): vol.All(int, vol.Range(min=2)),
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.All(int, vol.Range(min=0)),
        vol.Optional(CONF_OUTPUTS, default={}): OUTPUTS_SCHEMA,
    }
)


def _key_path(path: list) -> str:
    return ".".join(str(part) for part in path) or "<root>"


@dataclass(frozen=True)
class InitialBlock:
    """Raw initial data of a scenario; random tokens are drawn from the seed."""

    kind: str
    h_plus: Any = None
    z: Any = None
    x0_plus: Any = None
    y0_plus: Any = None
    gamma0: Any = None


@dataclass(frozen=True, eq=False)
class Scenario:
    """A validated scenario."""

    name: str
    level: int
    hamiltonian: str
    base: FiberBasePoint
    initial: InitialBlock
    t_span: tuple[float, float]
    dt: float = DEFAULT_DT
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    outputs: dict[str, str] = field(default_factory=dict)
    source: Path | None = None

    @property
    def group_level(self) -> int:
        """Return the level of the configuration group."""
        return self.level - 1

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_span[0], self.t_span[1], self.samples)

    def ham(self) -> HamiltonianSpec:
        return hamiltonian_by_name(self.hamiltonian, self.group_level)

    def with_overrides(
        self,
        dt: float | None = None,
        t_end: float | None = None,
        samples: int | None = None,
        seed: int | None = None,
    ) -> Scenario:
        """Return the scenario with command line numerics applied."""
        changes: dict[str, Any] = {}
        if dt is not None:
            if dt <= 0:
                raise ScenarioError("dt: must be positive")
            changes["dt"] = float(dt)
        if t_end is not None:
            if t_end <= self.t_span[0]:
                raise ScenarioError("t_span: t1 must be larger than t0")
            changes["t_span"] = (self.t_span[0], float(t_end))
        if samples is not None:
            if samples < 2:
                raise ScenarioError("samples: at least two samples are needed")
            changes["samples"] = int(samples)
        if seed is not None:
            changes["seed"] = int(seed)
        return replace(self, **changes) if changes else self

    def _draws(self) -> dict[str, Any]:
        """Resolve the random tokens in a fixed order."""
        rng = np.random.default_rng(self.seed)
        model = self.base.model
        block = self.initial
        values: dict[str, Any] = {}
        if block.x0_plus == RANDOM_UNIT:
            vector = rng.normal(size=3)
            values[CONF_X0_PLUS] = vector / np.linalg.norm(vector)
        elif block.x0_plus is not None:
            values[CONF_X0_PLUS] = np.asarray(block.x0_plus, dtype=float)
        if block.y0_plus == RANDOM:
            values[CONF_Y0_PLUS] = rng.uniform(-1.0, 1.0, 3)
        elif block.y0_plus is not None:
            values[CONF_Y0_PLUS] = np.asarray(block.y0_plus, dtype=float)
        if block.h_plus == RANDOM:
            values[CONF_H_PLUS] = random_element(rng, self.group_level, "plus")
        elif block.h_plus is not None:
            values[CONF_H_PLUS] = _group_entries(block.h_plus, self.group_level)
        else:
            values[CONF_H_PLUS] = identity(self.group_level, "plus")
        if block.gamma0 == RANDOM:
            values[CONF_GAMMA0] = model.element(rng.uniform(-1.0, 1.0, model.dim))
        elif block.gamma0 is not None:
            values[CONF_GAMMA0] = _coefficients(block.gamma0, model.dim, f"{CONF_INITIAL}.{CONF_GAMMA0}", model)
        if block.z == RANDOM:
            values[CONF_Z] = model.project(model.element(rng.uniform(-1.0, 1.0, model.dim)), "plus")
        elif block.z is not None:
            values[CONF_Z] = _coefficients(block.z, model.dim, f"{CONF_INITIAL}.{CONF_Z}", model)
        else:
            values[CONF_Z] = model.zero()
        return values

    def gamma0(self) -> AlgebraElement:
        """Return Γ∘ for su(2) or gamma initial blocks."""
        values = self._draws()
        if self.initial.kind == "su2":
            return initial_data_from_su2(values[CONF_X0_PLUS], values[CONF_Y0_PLUS]).gamma0
        if self.initial.kind == "gamma":
            return values[CONF_GAMMA0]
        raise ScenarioError(f"{CONF_INITIAL}: an (h₊, Z) block has no Γ∘")

    def initial_state(self) -> PhaseState:
        """Return the starting state with the frame g₋ = e."""
        values = self._draws()
        h_plus = values[CONF_H_PLUS]
        if self.initial.kind == "hz":
            try:
                return initial_state(self.base, h_plus, values[CONF_Z])
            except SubalgebraMembershipError as err:
                raise ScenarioError(f"{CONF_INITIAL}.{CONF_Z}: {err}") from err
        gamma = self.gamma0()
        frame = identity(self.group_level, "minus")
        return PhaseState(self.base, h_plus, omega=self.ham().omega(gamma), gamma=gamma, g_minus=frame)

    def aks_data(self) -> AksInitialData:
        """Return the data of the exact solver."""
        ham = self.ham()
        values = self._draws()
        if self.initial.kind == "su2" and self.hamiltonian == "sl2c_h2" and self.initial.h_plus is None:
            return initial_data_from_su2(values[CONF_X0_PLUS], values[CONF_Y0_PLUS])
        return initial_data_from_state(self.initial_state(), ham)


def _coefficients(values, dim: int, path: str, model) -> AlgebraElement:
    values = np.asarray(values, dtype=float)
    if values.size != dim:
        raise ScenarioError(f"{path}: expected {dim} coefficients, got {values.size}")
    return model.element(values)


def _group_entries(values, level: int) -> AnyGroupElement:
    path = f"{CONF_INITIAL}.{CONF_H_PLUS}"
    try:
        return unflatten(np.asarray(values, dtype=float), level, "plus")
    except (GroupInvariantViolation, LevelMismatch) as err:
        raise ScenarioError(f"{path}: {err}") from err


def base_point(a: float, b: float, c: float, z_minus, group_level: int) -> FiberBasePoint:
    """Return the base (h₋, Z₋) with h₋ = [[a, b+ic], [0, 1/a]] lifted by zero fibers."""
    path = CONF_BASE_POINT
    try:
        h_minus: AnyGroupElement = GroupElement(np.array([[a, complex(b, c)], [0.0, 1.0 / a]]), "minus")
    except GroupInvariantViolation as err:
        raise ScenarioError(f"{path}: {err}") from err
    for level in range(group_level):
        h_minus = SemidirectGroupElement(h_minus, tower_level(level).zero(), "minus")
    model = tower_level(group_level)
    z = model.zero() if z_minus is None else _coefficients(z_minus, model.dim, f"{path}.{CONF_Z_MINUS}", model)
    try:
        return FiberBasePoint(h_minus, z)
    except SubalgebraMembershipError as err:
        raise ScenarioError(f"{path}.{CONF_Z_MINUS}: {err}") from err


def parse_scenario(data: Any, source: Path | None = None) -> Scenario:
    """Validate a decoded scenario and build it."""
    try:
        config = SCENARIO_SCHEMA(data)
    except vol.Invalid as err:
        raise ScenarioError(f"{_key_path(err.path)}: {err.msg}") from err
    level = config[CONF_LEVEL]
    block = config[CONF_INITIAL]
    if CONF_X0_PLUS in block:
        kind = "su2"
        if level != 2:
            raise ScenarioError(f"{CONF_INITIAL}.{CONF_X0_PLUS}: su(2) data needs a level 2 scenario")
    elif CONF_GAMMA0 in block:
        kind = "gamma"
    else:
        kind = "hz"
    point = config[CONF_BASE_POINT]
    scenario = Scenario(
        name=config[CONF_NAME],
        level=level,
        hamiltonian=config[CONF_HAMILTONIAN],
        base=base_point(point[CONF_A], point[CONF_B], point[CONF_C], point.get(CONF_Z_MINUS), level - 1),
        initial=InitialBlock(kind, **{key: block.get(key) for key in INITIAL_KEYS}),
        t_span=tuple(config[CONF_T_SPAN]),
        dt=config[CONF_DT],
        samples=config[CONF_SAMPLES],
        seed=config[CONF_SEED],
        outputs=dict(config[CONF_OUTPUTS]),
        source=source,
    )
    try:
        scenario.ham()
    except LevelMismatch as err:
        raise ScenarioError(f"{CONF_HAMILTONIAN}: {err}") from err
    try:
        scenario.initial_state()
    except InitialDataError as err:
        raise ScenarioError(f"{CONF_INITIAL}: {err}") from err
    _LOGGER.info("Loaded scenario %s (level %s, %s, %s initial data)", scenario.name, level, scenario.hamiltonian, kind)
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a JSON scenario file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise ScenarioError(f"cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ScenarioError(f"{path} is not valid JSON: {err}") from err
    return parse_scenario(data, path)
