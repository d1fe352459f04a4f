"""Errors raised by the semidirect AKS toolkit."""

from __future__ import annotations


class SemidirectAksError(Exception):
    """Error to indicate a failure inside the toolkit."""


class DescriptorMismatch(SemidirectAksError):
    """Error to indicate operands built on different algebras."""


class InvalidStructure(SemidirectAksError):
    """Error to indicate a descriptor, form or splitting breaks its invariants."""

    def __init__(self, message: str, indices: tuple[int, ...] | None = None) -> None:
        """Initialize the error with the offending basis indices."""
        super().__init__(message)
        self.indices = indices


class SubalgebraMembershipError(SemidirectAksError):
    """Error to indicate an element is outside its declared subalgebra."""


class NotTraceless(SemidirectAksError):
    """Error to indicate a matrix is not in sl(2,C)."""


class GroupInvariantViolation(SemidirectAksError):
    """Error to indicate a group element drifted off its group."""


class LevelMismatch(SemidirectAksError):
    """Error to indicate semidirect operands of different levels."""


class FactorizationFailed(SemidirectAksError):
    """Error to indicate a group element could not be factorized."""

    def __init__(self, message: str, time: float | None = None) -> None:
        """Initialize the error with the failing time sample."""
        super().__init__(message if time is None else f"{message} (t={time!r})")
        self.time = time


class SeriesNotConverged(SemidirectAksError):
    """Error to indicate a power series hit its term cap."""


class OffFiberError(SemidirectAksError):
    """Error to indicate a phase point is not on the requested fiber."""


class DifferentialMismatch(SemidirectAksError):
    """Error to indicate an exact differential disagrees with finite differences."""


class NonCollectiveHamiltonian(SemidirectAksError):
    """Error to indicate a hamiltonian without an equivariant Legendre transform."""


class IntegrationAborted(SemidirectAksError):
    """Error to indicate the integrator met a non-finite value."""

    def __init__(self, message: str, time: float, last_state=None) -> None:
        """Initialize the error with the last good state."""
        super().__init__(f"{message} (t={time!r})")
        self.time = time
        self.last_state = last_state


class UnsupportedLevel(SemidirectAksError):
    """Error to indicate a tower level outside the supported range."""


class InitialDataError(SemidirectAksError):
    """Error to indicate inconsistent initial data for the exact solver."""


class ScenarioError(SemidirectAksError):
    """Error to indicate an invalid scenario file."""


class VerificationFailed(SemidirectAksError):
    """Error to indicate a verification suite reported failures."""
