"""Command line front end."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import colorlog
import numpy as np

from .const import (
    DEFAULT_SEED,
    DOMAIN,
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VERIFICATION,
    MAX_TOWER_LEVEL,
    UNIMODULAR_TOLERANCE,
    VERIFY_SUITES,
)
from .exceptions import (
    FactorizationFailed,
    GroupInvariantViolation,
    InitialDataError,
    IntegrationAborted,
    InvalidStructure,
    OffFiberError,
    ScenarioError,
    SemidirectAksError,
    SeriesNotConverged,
    UnsupportedLevel,
    VerificationFailed,
)
from .formats import format_number, write_descriptor
from .matrix_group import GroupElement, group_mul, iwasawa_factorize
from .runner import RunResult, simulate, solve_aks
from .scenario import load_scenario
from .verify import format_results, run_suite

_LOGGER = logging.getLogger(__name__)

CONFIG_ERRORS = (ScenarioError, InitialDataError, InvalidStructure, UnsupportedLevel)
NUMERICAL_ERRORS = (
    FactorizationFailed,
    SeriesNotConverged,
    IntegrationAborted,
    OffFiberError,
    GroupInvariantViolation,
)


def setup_logging(level: str) -> None:
    """Attach a colored stream handler to the package logger."""
    handler = colorlog.StreamHandler()
    handler.setFormatter(
        colorlog.ColoredFormatter(
            "%(log_color)s%(levelname)-8s%(reset)s %(name)s: %(message)s",
            log_colors={
                "DEBUG": "cyan",
                "INFO": "green",
                "WARNING": "yellow",
                "ERROR": "red",
                "CRITICAL": "red,bg_white",
            },
        )
    )
    logger = logging.getLogger(DOMAIN)
    logger.handlers[:] = [handler]
    logger.setLevel(level.upper())


def _add_scenario_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", required=True, type=Path, help="JSON scenario file")
    parser.add_argument("--out", type=Path, default=Path("output"), help="Output directory")
    parser.add_argument("--dt", type=float, help="Override the integration step")
    parser.add_argument("--t-end", type=float, help="Override the end of the time span")
    parser.add_argument("--samples", type=int, help="Override the number of output samples")
    parser.add_argument("--seed", type=int, help="Override the scenario seed")
    parser.add_argument("--strict", action="store_true", help="Fail when an invariant limit is breached")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semidirect-aks", description="Integrable systems on semidirect products.")
    parser.add_argument(
        "--log-level",
        default="info",
        choices=["debug", "info", "warning", "error"],
        help="Logging threshold",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    simulate_parser = commands.add_parser("simulate", help="Integrate a scenario numerically")
    _add_scenario_arguments(simulate_parser)

    solve_parser = commands.add_parser("solve-aks", help="Solve a scenario by group factorization")
    _add_scenario_arguments(solve_parser)
    solve_parser.add_argument("--compare", type=Path, help="Trajectory CSV to compare against")

    verify_parser = commands.add_parser("verify", help="Run the verification suites")
    verify_parser.add_argument("--suite", default="all", choices=VERIFY_SUITES)
    verify_parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    verify_parser.add_argument("--descriptor", type=Path, help="Descriptor JSON checked by the algebra suite")

    factorize_parser = commands.add_parser("factorize", help="Factorize an SL(2,C) matrix as u·b")
    factorize_parser.add_argument(
        "entries",
        nargs=4,
        type=complex,
        metavar="ENTRY",
        help="Matrix entries g00 g01 g10 g11, for example 1 0 1 1 or 0.6+0.8j",
    )

    export_parser = commands.add_parser("export-descriptor", help="Write a tower level descriptor")
    export_parser.add_argument("--level", type=int, default=0, choices=range(MAX_TOWER_LEVEL + 1))
    export_parser.add_argument("--out", type=Path, required=True, help="Descriptor JSON path")
    return parser


def _print_run(result: RunResult) -> None:
    for row in result.summary:
        status = "ok" if row["ok"] else "breach"
        print(f"{row['key']}: max {format_number(row['max'])} limit {format_number(row['limit'])} {status}")
    for group, value in result.deviations.items():
        print(f"max deviation {group}: {format_number(value)}")
    for kind, path in result.paths.items():
        print(f"{kind}: {path}")


def _print_matrix(name: str, g: GroupElement) -> None:
    for row in range(2):
        cells = " ".join(
            f"{format_number(g.matrix[row, col].real)}{'+' if g.matrix[row, col].imag >= 0 else '-'}"
            f"{format_number(abs(g.matrix[row, col].imag))}j"
            for col in range(2)
        )
        print(f"{name}[{row}] = {cells}")


def run_factorize(entries: list[complex]) -> int:
    matrix = np.array(entries, dtype=complex).reshape(2, 2)
    det = np.linalg.det(matrix)
    if abs(det - 1.0) > UNIMODULAR_TOLERANCE:
        raise ScenarioError(f"matrix determinant {det} is not 1 within {UNIMODULAR_TOLERANCE}")
    g = GroupElement(matrix / np.sqrt(det))
    u, b = iwasawa_factorize(g)
    residual = float(np.max(np.abs(group_mul(u, b).matrix - g.matrix)))
    _print_matrix("u", u)
    _print_matrix("b", b)
    print(f"residual = {format_number(residual)}")
    return EXIT_OK


def run_verify(suite: str, seed: int, descriptor: Path | None) -> int:
    results = run_suite(suite, seed, descriptor)
    for line in format_results(results):
        print(line)
    failures = [result for result in results if not result.passed]
    if failures:
        _LOGGER.error("%s of %s checks failed", len(failures), len(results))
        return EXIT_VERIFICATION
    return EXIT_OK


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "verify":
        return run_verify(args.suite, args.seed, args.descriptor)
    if args.command == "factorize":
        return run_factorize(args.entries)
    if args.command == "export-descriptor":
        print(write_descriptor(args.out, args.level))
        return EXIT_OK
    scenario = load_scenario(args.scenario).with_overrides(
        dt=args.dt, t_end=args.t_end, samples=args.samples, seed=args.seed
    )
    _LOGGER.info("Loaded scenario %s from %s", scenario.name, args.scenario)
    if args.command == "simulate":
        result = simulate(scenario, args.out, strict=args.strict)
    else:
        result = solve_aks(scenario, args.out, strict=args.strict, compare=args.compare)
    _print_run(result)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    """Run the command line and return its exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return dispatch(args)
    except CONFIG_ERRORS as err:
        _LOGGER.error("Configuration error: %s", err)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as err:
        _LOGGER.error("Numerical failure: %s", err)
        return EXIT_NUMERICAL
    except VerificationFailed as err:
        _LOGGER.error("Verification failed: %s", err)
        return EXIT_VERIFICATION
    except SemidirectAksError as err:
        _LOGGER.error("Run aborted: %s", err)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
