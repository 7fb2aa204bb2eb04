"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class FracBVPError(Exception):
    """Base class for all package errors."""


class DomainError(FracBVPError, ValueError):
    """An argument lies outside the domain of an operation."""


class UndefinedRegionError(DomainError):
    """Kernel evaluated where the literal branch definition gives no value."""


class ConfigurationError(FracBVPError, ValueError):
    """Inconsistent solver or scheme parameters."""


class SingularSampleError(FracBVPError, ArithmeticError):
    """An integrand produced a non-finite value at a quadrature node."""

    def __init__(self, message: str, node: float | None = None):
        super().__init__(message)
        self.node = node


class DivergenceSuspected(FracBVPError):
    """Successive refinements never settled; the integral is probably infinite."""

    def __init__(self, message: str, estimates=()):
        super().__init__(message)
        self.estimates = list(estimates)


class IllPosedDataError(FracBVPError, ValueError):
    """Forcing data violates the integrability precondition of the linear solve."""


class NonConvergenceError(FracBVPError):
    """Fixed-point iteration exhausted its budget."""

    def __init__(self, message: str, history=()):
        super().__init__(message)
        self.history = list(history)


class ExpressionError(FracBVPError):
    """Base class for expression-language failures."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class LexError(ExpressionError):
    pass


class ParseError(ExpressionError):
    pass


class UnboundIdentifierError(ExpressionError, KeyError):
    def __str__(self):
        return self.args[0]


class EvaluationDomainError(ExpressionError, ArithmeticError):
    """Division by zero, ``0^negative``, log of a nonpositive value, and so on.

    ``point`` maps each environment symbol to the value at the first
    offending sample so callers can report where the expression broke.
    """

    def __init__(self, message: str, point: dict | None = None):
        self.point = dict(point or {})
        if self.point:
            where = ", ".join(f"{k}={v!r}" for k, v in self.point.items())
            message = f"{message} at {where}"
        super().__init__(message)


class ProblemFileError(FracBVPError, ValueError):
    """Malformed problem file; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field
