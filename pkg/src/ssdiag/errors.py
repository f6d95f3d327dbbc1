"""Exception types shared across the package.

The CLI maps these onto exit codes: validation -> 2, degeneracy -> 3,
budget -> 4.
"""


class SsdiagError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(SsdiagError, ValueError):
    """Malformed input data or configuration."""


class DegeneracyError(SsdiagError, ArithmeticError):
    """A computation is undefined for the given data (e.g. constant regressor)."""


class BudgetError(SsdiagError):
    """An exact computation would exceed its combinatorial budget."""
