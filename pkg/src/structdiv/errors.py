"""Exception hierarchy shared by the library and the command line."""


class StructDivError(Exception):
    """Base class for all library errors."""


class ValidationError(StructDivError, ValueError):
    """An input violates a documented precondition."""


class NumericalError(StructDivError, ArithmeticError):
    """A computation failed numerically (non-convergence, lost definiteness)."""


class NotPositiveDefiniteError(NumericalError):
    """A similarity matrix required to be positive definite is not."""
