"""Tests for the command line."""

import json
import math
import re

import pytest

from semidirect_aks.cli import build_parser, main
from semidirect_aks.const import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_VERIFICATION
from semidirect_aks.formats import read_table
from semidirect_aks.runner import compare_files, simulate
from semidirect_aks.scenario import load_scenario


def _run(config_dir, out, command="simulate", *extra):
    return main(
        [
            command,
            "--scenario",
            str(config_dir / "sl2c-basic.json"),
            "--out",
            str(out),
            "--t-end",
            "0.2",
            "--samples",
            "3",
            *extra,
        ]
    )


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_factorize_prints_factors(capsys):
    assert main(["factorize", "1", "0", "1", "1"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("u[0] = 0.7071067811865")
    assert lines[2].startswith("b[0] = 1.414213562373095")
    assert lines[-1].startswith("residual = ")
    assert float(lines[-1].split("=")[1]) < 1e-14


def test_factorize_rejects_non_unimodular(caplog):
    assert main(["factorize", "2", "0", "0", "1"]) == EXIT_CONFIG
    assert "determinant" in caplog.text


def test_factorize_reports_ill_conditioned_input(caplog):
    assert main(["factorize", "1e7", "0", "0", "1e-7"]) == EXIT_NUMERICAL
    assert "Numerical failure" in caplog.text


def test_verify_algebra_suite(capsys):
    assert main(["verify", "--suite", "algebra"]) == EXIT_OK
    assert all(line.startswith("PASS") for line in capsys.readouterr().out.splitlines())


def test_verify_flags_corrupted_descriptor(tmp_path, capsys):
    path = tmp_path / "descriptor.json"
    assert main(["export-descriptor", "--level", "0", "--out", str(path)]) == EXIT_OK
    payload = json.loads(path.read_text(encoding="utf-8"))
    payload["structure_constants"][0][1][2] += 1.0
    path.write_text(json.dumps(payload), encoding="utf-8")
    capsys.readouterr()
    assert main(["verify", "--suite", "algebra", "--descriptor", str(path)]) == EXIT_VERIFICATION
    out = capsys.readouterr().out
    assert "FAIL algebra: antisymmetry" in out
    assert "(0, 1, 2)" in out


def test_bad_scenario_names_the_field(tmp_path, write_scenario, caplog):
    path = write_scenario(
        {"name": "bad", "level": 1, "hamiltonian": "quadratic_km", "initial": {}, "t_span": [1.0, 0.0]}
    )
    assert main(["simulate", "--scenario", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "t_span" in caplog.text


def test_missing_scenario_file(tmp_path):
    assert main(["simulate", "--scenario", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_simulate_writes_outputs(config_dir, tmp_path, capsys):
    assert _run(config_dir, tmp_path) == EXIT_OK
    assert (tmp_path / "trajectory.csv").is_file()
    assert (tmp_path / "report.csv").is_file()
    out = capsys.readouterr().out
    assert "theta_drift: max" in out
    names, values = read_table(tmp_path / "trajectory.csv")
    assert values.shape == (3, len(names))


def test_solve_aks_matches_simulation(config_dir, tmp_path, capsys):
    assert _run(config_dir, tmp_path / "numeric") == EXIT_OK
    simulated = tmp_path / "numeric" / "trajectory.csv"
    assert _run(config_dir, tmp_path / "exact", "solve-aks", "--compare", str(simulated)) == EXIT_OK
    assert "max deviation h_plus" in capsys.readouterr().out
    assert (tmp_path / "exact" / "factors.csv").is_file()
    deviations = compare_files(tmp_path / "exact" / "trajectory.csv", simulated)
    assert max(deviations.values()) < 1e-8


def test_solve_aks_frame_along_x3(config_dir, tmp_path):
    assert _run(config_dir, tmp_path, "solve-aks") == EXIT_OK
    names, values = read_table(tmp_path / "trajectory.csv")
    column = values[:, names.index("g_minus.m00.re")]
    assert column == pytest.approx([math.exp(-t / 2) for t in values[:, 0]], abs=1e-12)


def test_runs_are_reproducible(config_dir, tmp_path):
    assert _run(config_dir, tmp_path / "first", "solve-aks") == EXIT_OK
    assert _run(config_dir, tmp_path / "second", "solve-aks") == EXIT_OK
    first = (tmp_path / "first" / "trajectory.csv").read_bytes()
    assert first == (tmp_path / "second" / "trajectory.csv").read_bytes()


def test_export_descriptor(tmp_path, capsys):
    path = tmp_path / "level1.json"
    assert main(["export-descriptor", "--level", "1", "--out", str(path)]) == EXIT_OK
    assert str(path) in capsys.readouterr().out
    assert len(json.loads(path.read_text(encoding="utf-8"))["labels"]) == 12


@pytest.mark.parametrize(("scenario", "flow"), [("sl2c-basic.json", "factor"), ("sl2c-fiber.json", "collective")])
def test_simulate_picks_the_flow_from_the_initial_block(config_dir, tmp_path, scenario, flow):
    result = simulate(load_scenario(config_dir / scenario), tmp_path)
    assert result.trajectory.name == flow


def test_requirements_list_only_used_packages(config_dir):
    lines = (config_dir.parent / "requirements.txt").read_text(encoding="utf-8").splitlines()
    names = {re.split(r"[=<>]", line)[0] for line in lines if line.strip()}
    assert names == {"colorlog", "numpy", "scipy", "voluptuous", "pytest", "ruff"}
