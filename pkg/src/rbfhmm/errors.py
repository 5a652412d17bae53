"""Exception types shared across the package.

Most derive from ValueError so that callers who do not care about the
fine-grained type can still catch the usual builtin.
"""


class RbfHmmError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(RbfHmmError, ValueError):
    """Array shapes do not line up."""


class InvalidParameterError(RbfHmmError, ValueError):
    """A parameter is outside its valid domain (nonpositive scale, bad dof...)."""


class DegenerateInputError(RbfHmmError, ValueError):
    """Input is degenerate for the requested operation (e.g. zero vector for cosine)."""


class InsufficientDataError(RbfHmmError, ValueError):
    """Not enough observations for the requested construction."""


class SchemaError(RbfHmmError, ValueError):
    """Malformed configuration or data file."""


class MissingInputError(RbfHmmError, FileNotFoundError):
    """A required input file or directory does not exist."""


class NumericalError(RbfHmmError, ArithmeticError):
    """A numerical operation failed (non-finite values, Cholesky breakdown...)."""


class SingularityError(NumericalError):
    """A linear solve hit an exactly singular matrix."""


class DivergenceError(NumericalError):
    """A simulated process exceeded its divergence bound."""


class GenerationError(RbfHmmError, RuntimeError):
    """Random generation failed after the configured number of retries."""
