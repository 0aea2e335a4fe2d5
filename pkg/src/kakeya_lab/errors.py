"""Exception hierarchy shared by every module."""

from __future__ import annotations


class KakeyaLabError(Exception):
    """Base class for all library errors."""


class InversionOfZero(KakeyaLabError, ZeroDivisionError):
    pass


class ZeroDirection(KakeyaLabError, ValueError):
    pass


class DomainMismatch(KakeyaLabError, ValueError):
    """Objects living over different (q, n) were combined."""


class UnsupportedDimension(KakeyaLabError, ValueError):
    pass


class NotPrime(KakeyaLabError, ValueError):
    pass


class CapExceeded(KakeyaLabError, ValueError):
    pass


class EmptyFamily(KakeyaLabError, ValueError):
    pass


class FamilyParseError(KakeyaLabError, ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class PreconditionFailed(KakeyaLabError):
    """A hypothesis of a bound argument does not hold for the given input.

    ``hypothesis`` names the violated condition, ``witness`` carries whatever
    concrete data exhibits the violation.
    """

    def __init__(self, hypothesis: str, message: str, witness: object = None):
        super().__init__(f"{hypothesis}: {message}")
        self.hypothesis = hypothesis
        self.witness = witness


class HypothesisFailed(PreconditionFailed):
    """One of the Wolff-type counting hypotheses fails."""


class NotPlany(PreconditionFailed):
    def __init__(self, message: str, witness: object = None):
        super().__init__("planiness", message, witness)


class InvariantViolation(KakeyaLabError, AssertionError):
    """An internal consistency check failed; indicates a bug, not bad input."""
