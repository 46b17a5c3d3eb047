"""Exception types shared across modules."""

from __future__ import annotations


class PickGrassError(Exception):
    """Base class for library errors."""


class DimensionMismatch(PickGrassError, ValueError):
    pass


class DegreeMismatch(PickGrassError, ValueError):
    pass


class OutsideBall(PickGrassError, ValueError):
    pass


class ValidationError(PickGrassError, ValueError):
    """Input violates a documented precondition."""


class DegeneracyError(PickGrassError, ArithmeticError):
    """A numerical degeneracy prevents a reliable answer.

    Carries an optional ``flags`` dict so callers (the CLI in particular) can
    report what went wrong.
    """

    def __init__(self, message: str, flags: dict | None = None):
        super().__init__(message)
        self.flags = dict(flags or {})


class Unsupported(PickGrassError, NotImplementedError):
    pass
