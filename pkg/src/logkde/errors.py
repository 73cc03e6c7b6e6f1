"""Exception hierarchy.

Every error carries a short ``code`` that the command line front end prints
as a machine-parseable prefix.
"""


class LogKDEError(Exception):
    code = "E_DOMAIN"


class DomainError(LogKDEError, ValueError):
    """Argument outside the mathematical domain of an operation."""

    code = "E_DOMAIN"


class DegenerateSampleError(DomainError):
    """Sample too small or without spread for the requested statistic."""


class DivergentFunctionalError(DomainError):
    """An integral functional of the target density is infinite."""


class UnsupportedError(DomainError):
    """Valid inputs that form an unsupported combination."""


class ParseError(LogKDEError, ValueError):
    code = "E_PARSE"

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class ConfigError(LogKDEError, ValueError):
    code = "E_CONFIG"

    def __init__(self, message, field=None):
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field


class OptimizationError(LogKDEError, RuntimeError):
    code = "E_OPT"


class BoundaryMinimumWarning(UserWarning):
    """A bandwidth criterion was minimized at the edge of its search bracket."""


class FallbackWarning(UserWarning):
    """A selector fell back to a secondary rule."""
