"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class CloeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidRange(CloeError, ValueError):
    pass


class DimensionMismatch(CloeError, ValueError):
    pass


class ParseError(CloeError, ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


class SingularPencil(CloeError, ArithmeticError):
    """Raised when ``j*omega*E - A`` cannot be solved, i.e. ``j*omega`` is a pole."""

    def __init__(self, omega: float):
        super().__init__(f"pencil is singular at omega={omega!r}")
        self.omega = omega


class DuplicateFrequency(CloeError, ValueError):
    pass


class InsufficientData(CloeError, ValueError):
    pass


class CoincidentPoints(CloeError, ValueError):
    pass


class NotConjugateClosed(CloeError, ValueError):
    pass


class RankZero(CloeError):
    """The data carry no dynamics; there is nothing to project onto."""


class GridExhausted(CloeError):
    pass


class ZeroDenominator(CloeError, ZeroDivisionError):
    pass


class BudgetTooSmall(CloeError, ValueError):
    pass
