"""Exception hierarchy shared by all modules."""


class DelidxError(Exception):
    """Base class for errors raised by delidx."""

    exit_code = 1


class DomainError(DelidxError, ValueError):
    """Parameters outside the admissible range."""

    exit_code = 2


class NumericError(DelidxError, RuntimeError):
    """A numerical procedure failed to converge.

    ``residual`` carries the last achieved residual or a short description of
    the disagreement, when available.
    """

    exit_code = 3

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConsistencyError(DelidxError, RuntimeError):
    """A computed quantity contradicts a proven property of the geometry."""

    exit_code = 3
