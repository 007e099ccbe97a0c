"""Exception types shared across the package."""


class TPriorError(Exception):
    """Base class for all package errors."""


class DomainError(TPriorError, ValueError):
    """An argument lies outside the domain of a function."""


class NumericalError(TPriorError, ArithmeticError):
    """A computation lost precision or could not be normalized."""


class DegenerateDataError(NumericalError):
    """The data carry no information for a required update (e.g. zero spread)."""
