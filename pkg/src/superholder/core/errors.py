"""Domain errors.

Every error is a `ValueError` so callers that only care about "bad input"
can catch one thing. Verdicts (certified / refuted / unresolved) are not
errors and never go through here.
"""

from __future__ import annotations


class ShLabError(ValueError):
    pass


class ContextMismatch(ShLabError):
    """Operands live over different primes, depths or ranks."""


class DivisionByZero(ShLabError, ZeroDivisionError):
    pass


class InsufficientPrecision(ShLabError):
    """A p-adic digit precision or X-adic truncation is too small for the request."""


class NotAUnit(ShLabError):
    pass


class SubstitutionDiverges(ShLabError):
    """The inner series of a substitution does not have positive, resolved valuation."""


class PreconditionViolation(ShLabError):
    pass


class TableTooShort(ShLabError):
    pass


class TooFewPoints(ShLabError):
    """Fewer than two uncensored valuation floors are available for a fit."""


class NotInvertible(ShLabError):
    pass


class RPreconditionFailed(ShLabError):
    pass


class UnknownSuite(ShLabError):
    pass


class NotPsiCompatible(ShLabError):
    def __init__(self, msg: str, index: int) -> None:
        super().__init__(msg)
        self.index = index


class NotCommutant(ShLabError):
    def __init__(self, msg: str, reason: str, witness: object | None = None) -> None:
        super().__init__(msg)
        self.reason = reason
        self.witness = witness


class ParseError(ShLabError):
    def __init__(self, msg: str, offset: int) -> None:
        super().__init__(f"{msg} (at byte offset {offset})")
        self.offset = offset


class UsageError(ShLabError):
    """Malformed command-line flags."""
