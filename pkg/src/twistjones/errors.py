"""Typed error hierarchy shared by all modules.

Exit-code mapping for the CLI: 2 = domain, 3 = accuracy, 4 = solver.
"""


class WorkbenchError(Exception):
    """Base class for all workbench errors."""

    exit_code = 1


class DomainError(WorkbenchError):
    """Input outside an operation's domain (zero argument, bad region, ...)."""

    exit_code = 2


class BranchError(DomainError):
    """Evaluation requested outside the supported branch of a multivalued map."""


class AccuracyError(WorkbenchError):
    """A numerical target tolerance could not be met."""

    exit_code = 3

    def __init__(self, message, achieved=None, levels=None):
        super().__init__(message)
        self.achieved = achieved
        self.levels = levels


class PrecisionError(AccuracyError):
    """Doubling check disagreed; carries a suggested working precision."""

    def __init__(self, message, suggested_bits=None):
        super().__init__(message)
        self.suggested_bits = suggested_bits


class InconsistencyError(AccuracyError):
    """Two supposedly-equal formulas disagreed beyond tolerance."""


class SolverError(WorkbenchError):
    """Iterative solver failed to converge."""

    exit_code = 4

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class DegeneracyError(SolverError):
    """Singular Hessian or otherwise degenerate critical data."""


class FitError(SolverError):
    """Least-squares fit rejected (ill-conditioned design matrix)."""


class DegenerateRootWarning(UserWarning):
    """A q-Pochhammer entry vanished exactly at the root of unity."""
