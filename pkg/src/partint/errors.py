"""Exception hierarchy shared across the package."""


class PartintError(Exception):
    """Base class for all errors raised by partint."""


class ExprError(PartintError):
    """Base class for expression parsing and evaluation errors."""


class ParseError(ExprError):
    """Syntax error in an expression source string.

    Attributes:
        offset: Byte offset (UTF-8) of the offending token.
        expected: Sorted tuple of token kinds that would have been accepted.
    """

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class UnknownFunction(ParseError):
    pass


class DomainError(ExprError, ArithmeticError):
    """Evaluation left the domain of an operation (pole, sqrt/log out of range)."""

    def __init__(self, message, subexpression):
        self.subexpression = subexpression
        super().__init__(f"{message} in '{subexpression}'")


class UnboundSymbol(ExprError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NotPolynomial(PartintError):
    """Expression cannot be represented as a Laurent polynomial."""


class ChartError(PartintError):
    pass


class NonConvergence(PartintError):
    """Newton iteration of an implicit step failed to converge."""


class SeparabilityViolation(PartintError):
    pass


class IntegrationAborted(PartintError):
    """A stepper failed mid-run; ``trajectory`` holds the states computed so far."""

    def __init__(self, cause, trajectory):
        self.cause = cause
        self.trajectory = trajectory
        super().__init__(f"integration aborted at t={trajectory.times[-1]:.17g}: {cause}")


class PreconditionViolation(PartintError):
    pass


class RankDeficient(PartintError):
    pass


class NotAMomentumCoordinate(PartintError):
    pass


class SamplerError(PartintError):
    pass
