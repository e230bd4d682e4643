"""
Exception hierarchy shared by all modules.

Each class maps onto one exit status of the command line harness, see
:data:`inclsolve.harness.EXIT_CODES`.
"""


class InclsolveError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(InclsolveError, ValueError):
    """A numeric parameter is outside its admissible range."""


class ConfigurationError(InclsolveError, ValueError):
    """A request is inconsistent with the available problem data."""


class ShapeError(InclsolveError, ValueError):
    """Vector dimensions do not match."""


class NumericError(InclsolveError, ArithmeticError):
    """An iterate or metric became non-finite."""
