"""Exception types shared across the library.

The CLI maps these onto process exit codes (validation 2, numerical
failure 3, I/O 4), so library code should raise the most specific type.
"""


class ParameterError(ValueError):
    """A model or run parameter violates its documented bounds."""


class NumericalError(RuntimeError):
    """An eigensolve, fit, or simulation failed or is ill-conditioned."""


class ResourceLimitError(RuntimeError):
    """A requested allocation exceeds the configured cap."""
