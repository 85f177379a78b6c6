"""Exception types raised across the package."""


class PdAdaptError(Exception):
    """Base class for all package errors."""


class ConfigError(PdAdaptError, ValueError):
    """Invalid problem or solver configuration (e.g. zero strong convexity)."""


class DomainError(PdAdaptError, ValueError):
    """A dual variable was evaluated outside the domain of a conjugate."""


class ConvergenceError(PdAdaptError, RuntimeError):
    """An inner iterative routine did not reach its tolerance."""


class DegenerateGap(PdAdaptError, ArithmeticError):
    """A measured duality gap was non-positive; adaptation must be skipped."""


class ParseError(PdAdaptError, ValueError):
    """Malformed input file. ``lineno`` is 1-based when known."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
