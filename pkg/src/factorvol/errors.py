"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage problems exit 1, DataError exits 2,
NumericalError exits 3.
"""


class FactorVolError(Exception):
    """Base class for all package-specific errors."""


class DataError(FactorVolError):
    """Invalid, inconsistent, or unreadable input data."""


class NumericalError(FactorVolError):
    """A numerical procedure failed or left its valid region."""


class UsageError(FactorVolError):
    """Bad configuration or command-line usage."""
