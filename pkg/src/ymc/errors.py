"""Exception types shared across the package.

Every error raised on a precondition violation carries ``where``, the
dotted ``module.operation`` name of the contract that was violated, so
the CLI can report which check failed.
"""


class YmcError(Exception):
    """Base class for all package errors."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"[{where}] {message}" if where else message)


class DomainError(YmcError):
    """Input outside an operation's stated domain (shape, range, type)."""


class GaugeError(YmcError):
    """A field that must satisfy the Coulomb gauge does not."""


class CapacityError(YmcError):
    """Requested dense/tensor computation exceeds the desk-scale caps."""


class NumericalError(YmcError):
    """An iterative solve failed to meet its residual contract."""

    def __init__(self, message, where=None, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual={residual:.3e})"
        super().__init__(message, where)


class ConfigError(YmcError):
    """Run configuration missing, malformed, or inconsistent."""
