"""Exception types shared across the package."""


class ResourceLimitError(RuntimeError):
    """Raised when an exhaustive computation would exceed its size bound."""


class DegenerateProblemError(ValueError):
    """Raised when a metric is undefined because the input has no spread."""


class FitFailureError(RuntimeError):
    """Raised when a nonlinear fit fails to converge from every start point."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(ValueError):
    """Raised for malformed configuration files or unknown registry names."""


class ParseError(ValueError):
    """Raised when a persisted artifact cannot be read back.

    Carries the one-based line number when the failure is line-local.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
