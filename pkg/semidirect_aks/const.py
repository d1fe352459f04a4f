"""Constants for the semidirect AKS toolkit."""

from __future__ import annotations

from dataclasses import dataclass

DOMAIN = "semidirect_aks"

# Basis order of sl(2,C) viewed as a real algebra, used in every file format.
SL2C_LABELS = ("X1", "X2", "X3", "E", "iE", "H")
SL2C_DUAL_LABELS = ("x1", "x2", "x3", "e", "e~", "h")
SU2_INDICES = (0, 1, 2)
B_INDICES = (3, 4, 5)

# Tolerances
DET_TOLERANCE = 1e-10
UNITARY_TOLERANCE = 1e-10
TRIANGULAR_TOLERANCE = 1e-12
TRACE_TOLERANCE = 1e-10
MEMBERSHIP_TOLERANCE = 1e-10
RANK_TOLERANCE = 1e-10
FIBER_TOLERANCE = 1e-10
CONDITION_LIMIT = 1e12
UNIMODULAR_TOLERANCE = 1e-8
DIFFERENTIAL_TOLERANCE = 1e-5
EQUIVARIANCE_TOLERANCE = 1e-8

# Series and finite differences
SERIES_TOLERANCE = 1e-14
SERIES_MAX_TERMS = 60
FD_STEP = 1e-6
SAMPLE_FD_SPACING = 1e-3

# Numerics defaults for scenarios
DEFAULT_DT = 1e-3
DEFAULT_T_START = 0.0
DEFAULT_T_END = 2.0
DEFAULT_SAMPLES = 201
DEFAULT_SEED = 20240417
MAX_TOWER_LEVEL = 3

# Output
SIGNIFICANT_DIGITS = 17
TRAJECTORY_FILE = "trajectory.csv"
REPORT_FILE = "report.csv"
FACTORS_FILE = "factors.csv"

# Exit codes
EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VERIFICATION = 3

HAMILTONIAN_KINDS = ("collective_adinvariant", "quadratic_km", "sl2c_h2")
SCENARIO_HAMILTONIANS = ("quadratic_km", "sl2c_h2", "zero")
VERIFY_SUITES = ("algebra", "groups", "brackets", "dynamics", "aks", "all")


@dataclass(frozen=True)
class InvariantDescription:
    """Describe one invariant column of a trajectory report."""

    key: str
    name: str
    closed_form_limit: float
    integrator_limit: float


INVARIANT_TYPES = [
    InvariantDescription(
        key="theta_drift",
        name="Generator drift",
        closed_form_limit=1e-12,
        integrator_limit=1e-7,
    ),
    InvariantDescription(
        key="energy_drift",
        name="Hamiltonian drift",
        closed_form_limit=1e-8,
        integrator_limit=1e-6,
    ),
    InvariantDescription(
        key="gamma_casimir_drift",
        name="Gamma Casimir drift",
        closed_form_limit=1e-8,
        integrator_limit=1e-6,
    ),
    InvariantDescription(
        key="commutator_norm",
        name="Commutator norm",
        closed_form_limit=1e-10,
        integrator_limit=1e-8,
    ),
    InvariantDescription(
        key="projector_norm",
        name="Plus projection of the minus commutator",
        closed_form_limit=float("inf"),
        integrator_limit=float("inf"),
    ),
    InvariantDescription(
        key="base_drift",
        name="Base point drift",
        closed_form_limit=1e-9,
        integrator_limit=1e-9,
    ),
]

# Scenario keys
CONF_NAME = "name"
CONF_LEVEL = "level"
CONF_HAMILTONIAN = "hamiltonian"
CONF_BASE_POINT = "base_point"
CONF_A = "a"
CONF_B = "b"
CONF_C = "c"
CONF_Z_MINUS = "z_minus"
CONF_INITIAL = "initial"
CONF_H_PLUS = "h_plus"
CONF_Z = "z"
CONF_X0_PLUS = "x0_plus"
CONF_Y0_PLUS = "y0_plus"
CONF_GAMMA0 = "gamma0"
CONF_T_SPAN = "t_span"
CONF_DT = "dt"
CONF_SAMPLES = "samples"
CONF_SEED = "seed"
CONF_OUTPUTS = "outputs"
CONF_TRAJECTORY = "trajectory"
CONF_REPORT = "report"
CONF_FACTORS = "factors"

RANDOM = "random"
RANDOM_UNIT = "random_unit"
SCENARIO_LEVELS = (1, 2)
