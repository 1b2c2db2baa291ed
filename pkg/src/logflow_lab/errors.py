"""Exception hierarchy shared by every logflow_lab module."""

from __future__ import annotations


class LogflowError(Exception):
    """Base class for all library errors."""


class DomainError(LogflowError, ValueError):
    """An argument lies outside the set where an operation is defined."""


class ConfigurationError(LogflowError, ValueError):
    """Inconsistent grids, domains, ladders or experiment configs."""


class PositivityError(LogflowError, ValueError):
    """A conformal factor that must be strictly positive is not."""


class ExtrapolationError(DomainError):
    """A pulled-back point falls outside a stored time-1 field."""


class ShootingError(LogflowError, RuntimeError):
    """The profile shooting iteration could not bracket the separatrix."""

    def __init__(self, message: str, bracket: tuple[float, float] | None = None):
        super().__init__(message)
        self.bracket = bracket


class SolverError(LogflowError, RuntimeError):
    """Newton failed after all dt-halving retries.

    ``residual`` is the last relative residual reached and ``trajectory``
    holds whatever snapshots were emitted before the failure.
    """

    def __init__(self, message: str, residual: float = float("nan"), trajectory=None):
        super().__init__(message)
        self.residual = residual
        self.trajectory = trajectory


class SelectorError(LogflowError, KeyError):
    """An export selector names an artifact the manifest does not have."""
