"""Trajectory, report and descriptor files."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import numpy as np

from .const import INVARIANT_TYPES, SIGNIFICANT_DIGITS
from .dynamics import PhaseState, Trajectory
from .exceptions import InvalidStructure, ScenarioError
from .lie_core import AlgebraElement, BilinearForm, LieAlgebraDescriptor, Splitting
from .matrix_group import AnyGroupElement, GroupElement
from .sl2c_model import tower_level
from .utils import max_abs

_LOGGER = logging.getLogger(__name__)

COLUMN_GROUPS = ("h_plus", "z", "omega", "gamma", "g_minus")
DESCRIPTOR_FORMAT = "semidirect_aks.descriptor"


def format_number(value: float) -> str:
    return f"{float(value):.{SIGNIFICANT_DIGITS}g}"


def group_columns(prefix: str, g: AnyGroupElement) -> list[tuple[str, float]]:
    """Return named real columns of a group element, re/im interleaved, depth first."""
    if isinstance(g, GroupElement):
        columns = []
        for row in range(2):
            for col in range(2):
                entry = complex(g.matrix[row, col])
                columns.append((f"{prefix}.m{row}{col}.re", entry.real))
                columns.append((f"{prefix}.m{row}{col}.im", entry.imag))
        return columns
    return group_columns(prefix, g.base) + algebra_columns(prefix, g.fiber)


def algebra_columns(prefix: str, x: AlgebraElement) -> list[tuple[str, float]]:
    labels = x.descriptor.basis_labels
    return [(f"{prefix}.{label}", float(value)) for label, value in zip(labels, x.coefficients)]


def state_columns(state: PhaseState) -> list[tuple[str, float]]:
    """Return the columns of one sample, without time and invariants."""
    columns = group_columns("h_plus", state.h_plus)
    if state.coordinates == "hz":
        columns += algebra_columns("z", state.z)
    else:
        columns += algebra_columns("omega", state.omega) + algebra_columns("gamma", state.gamma)
    if state.g_minus is not None:
        columns += group_columns("g_minus", state.g_minus)
    return columns


def _header_comment(kind: str, trajectory: Trajectory, names: list[str]) -> str:
    state = trajectory.states[0]
    return (
        f"# semidirect_aks {kind} name={trajectory.name} level={state.level} "
        f"coordinates={state.coordinates} columns={' '.join(names)}"
    )


def _write_rows(path: Path, comment: str, names: list[str], rows: list[list[float]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        handle.write(comment + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(names)
        for row in rows:
            writer.writerow(format_number(value) for value in row)


def write_trajectory(path: str | Path, trajectory: Trajectory) -> Path:
    """Write t, state columns and invariant columns."""
    path = Path(path)
    if not trajectory.states:
        raise ValueError("empty trajectory")
    keys = [description.key for description in INVARIANT_TYPES if description.key in trajectory.invariants]
    names = ["t"] + [name for name, _ in state_columns(trajectory.states[0])] + keys
    rows = []
    for index, (t, state) in enumerate(zip(trajectory.times, trajectory.states)):
        values = [value for _, value in state_columns(state)]
        rows.append([t, *values, *(trajectory.invariants[key][index] for key in keys)])
    _write_rows(path, _header_comment("trajectory", trajectory, names), names, rows)
    _LOGGER.info("Wrote %s samples to %s", len(rows), path)
    return path


def write_factors(path: str | Path, trajectory: Trajectory) -> Path:
    """Write the factor curves t, h₊(t), g₋(t)."""
    path = Path(path)
    first = trajectory.states[0]
    if first.g_minus is None:
        raise ValueError("trajectory has no minus factor")
    columns = group_columns("h_plus", first.h_plus) + group_columns("g_minus", first.g_minus)
    names = ["t"] + [name for name, _ in columns]
    rows = [
        [t, *(value for _, value in group_columns("h_plus", state.h_plus) + group_columns("g_minus", state.g_minus))]
        for t, state in zip(trajectory.times, trajectory.states)
    ]
    _write_rows(path, _header_comment("factors", trajectory, names), names, rows)
    _LOGGER.info("Wrote factor curves to %s", path)
    return path


def invariant_summary(trajectory: Trajectory, exact: bool) -> list[dict]:
    """Return one row per invariant with its maximum and limit."""
    summary = []
    for description in INVARIANT_TYPES:
        values = trajectory.invariants.get(description.key)
        if values is None:
            continue
        finite = values[np.isfinite(values)]
        worst = float(np.max(finite)) if finite.size else float("nan")
        limit = description.closed_form_limit if exact else description.integrator_limit
        summary.append(
            {
                "key": description.key,
                "name": description.name,
                "max": worst,
                "limit": limit,
                "ok": bool(not np.isfinite(worst) or worst <= limit),
            }
        )
    return summary


def write_report(path: str | Path, summary: list[dict], name: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        handle.write(f"# semidirect_aks report name={name}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["invariant", "max", "limit", "status"])
        for row in summary:
            writer.writerow(
                [row["key"], format_number(row["max"]), format_number(row["limit"]), "ok" if row["ok"] else "breach"]
            )
    _LOGGER.info("Wrote invariant report to %s", path)
    return path


def read_table(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a CSV written by this module, skipping the comment line."""
    path = Path(path)
    try:
        lines = [line for line in path.read_text(encoding="utf-8").splitlines() if not line.startswith("#")]
    except OSError as err:
        raise ScenarioError(f"cannot read {path}: {err}") from err
    rows = list(csv.reader(lines))
    if not rows:
        raise ScenarioError(f"{path} has no header")
    names = rows[0]
    try:
        values = np.array([[float(value) for value in row] for row in rows[1:]], dtype=float)
    except ValueError as err:
        raise ScenarioError(f"{path} has a non-numeric entry") from err
    return names, values.reshape(len(rows) - 1, len(names))


def compare_tables(first: tuple[list[str], np.ndarray], second: tuple[list[str], np.ndarray]) -> dict[str, float]:
    """Return the maximum deviation per column group over the shared columns."""
    names_a, values_a = first
    names_b, values_b = second
    if values_a.shape[0] != values_b.shape[0]:
        raise ScenarioError("tables have different sample counts")
    if np.max(np.abs(values_a[:, 0] - values_b[:, 0]), initial=0.0) > 1e-12:
        raise ScenarioError("tables are sampled at different times")
    index_b = {name: position for position, name in enumerate(names_b)}
    deviations: dict[str, float] = {}
    for position, name in enumerate(names_a):
        group = name.split(".", 1)[0]
        if group not in COLUMN_GROUPS or name not in index_b:
            continue
        deviation = max_abs(values_a[:, position] - values_b[:, index_b[name]])
        deviations[group] = max(deviations.get(group, 0.0), deviation)
    return deviations


def descriptor_payload(level: int) -> dict:
    """Return the JSON payload of a tower level: labels, constants, form and splitting."""
    model = tower_level(level)
    descriptor = model.descriptor
    return {
        "format": DESCRIPTOR_FORMAT,
        "name": descriptor.name,
        "level": descriptor.level,
        "labels": list(descriptor.basis_labels),
        "structure_constants": descriptor.structure_constants.tolist(),
        "form": model.form.matrix.tolist(),
        "ad_invariant": model.form.ad_invariant,
        "plus": list(model.split.plus_basis_indices),
        "minus": list(model.split.minus_basis_indices),
    }


def write_descriptor(path: str | Path, level: int) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(descriptor_payload(level), indent=1), encoding="utf-8")
    _LOGGER.info("Wrote level %s descriptor to %s", level, path)
    return path


def read_descriptor(path: str | Path) -> tuple[LieAlgebraDescriptor, BilinearForm | None, Splitting | None]:
    """Load a descriptor file; form and splitting are optional in the file."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise ScenarioError(f"cannot load descriptor {path}: {err}") from err
    try:
        descriptor = LieAlgebraDescriptor(
            tuple(payload["labels"]),
            np.array(payload["structure_constants"], dtype=float),
            level=int(payload.get("level", 0)),
            name=str(payload.get("name", path.stem)),
        )
    except KeyError as err:
        raise ScenarioError(f"descriptor {path} lacks the key {err}") from err
    form = None
    if "form" in payload:
        matrix = np.array(payload["form"], dtype=float)
        form = BilinearForm(descriptor, matrix, bool(payload.get("ad_invariant", False)))
    split = None
    if "plus" in payload and "minus" in payload:
        try:
            split = Splitting(descriptor.dim, tuple(payload["plus"]), tuple(payload["minus"]))
        except InvalidStructure as err:
            raise ScenarioError(f"descriptor {path}: {err}") from err
    return descriptor, form, split
