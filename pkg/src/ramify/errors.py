"""Shared exception types."""


class RamifyError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(RamifyError, ValueError):
    """Malformed input, violated invariant, or precondition failure."""


class BudgetError(RamifyError, RuntimeError):
    """A configured resource budget was exceeded; no approximate result is returned."""
