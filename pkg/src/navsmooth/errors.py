"""Exception types shared across the toolkit."""


class NavError(Exception):
    """Base class for all navsmooth errors."""

    code = "NAV_ERROR"


class ArgumentError(NavError, ValueError):
    """Invalid argument value or inconsistent input shapes/lengths."""

    code = "ARGUMENT"


class DomainError(NavError, ValueError):
    """Input outside the mathematical domain of an operation."""

    code = "DOMAIN"


class NumericalError(NavError, ArithmeticError):
    """A numerical operation failed (singular matrix, non-finite values)."""

    code = "NUMERICAL"


class FormatError(NavError, ValueError):
    """Malformed file content; carries the offending line when known."""

    code = "FORMAT"

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class ProviderError(NavError, RuntimeError):
    """A correction provider failed; carries the epoch index."""

    code = "PROVIDER"

    def __init__(self, message: str, epoch: int | None = None):
        self.epoch = epoch
        if epoch is not None:
            message = f"{message} (epoch {epoch})"
        super().__init__(message)
