"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes, see :mod:`relweyl.lab.cli`.
"""


class RelWeylError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 4


class ConfigError(RelWeylError):
    exit_code = 2


class DomainError(RelWeylError, ValueError):
    """An argument lies outside the range where a formula or operation is defined."""

    exit_code = 3


class AdmissibilityError(DomainError):
    """A parameter tuple violates a hypothesis of the relative Weyl theorems."""


class ValidationError(RelWeylError):
    """A sampled structural condition failed; ``radius`` names the offending sample."""

    def __init__(self, message, radius=None):
        super().__init__(message)
        self.radius = radius


class DivergenceError(RelWeylError):
    """An absolute phase-space integral does not exist for this potential."""

    exit_code = 3


class NumericError(RelWeylError):
    exit_code = 4


class OutputError(RelWeylError):
    """A report could not be serialized or written."""

    exit_code = 4
