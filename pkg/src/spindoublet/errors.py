"""Exception types shared across the package.

Two failure classes are kept apart on purpose: bad input that a caller can
fix (ValidationError) and a computation that could not be completed to the
promised accuracy (NumericalError). The command line maps them to distinct
exit codes.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class NumericalError(RuntimeError):
    """A solver failed to reach its accuracy contract."""
