"""Exception types shared across the package."""


class PhasefieldError(Exception):
    """Base class for library errors."""


class ConvergenceError(PhasefieldError, RuntimeError):
    """An iterative solver did not converge.

    The ``diagnostics`` attribute holds a JSON-serializable dict with the
    iteration count and the last iterates.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class GridError(PhasefieldError, ValueError):
    """Grid shapes, spacings or coverage are incompatible with a request."""


class DegenerateWindowError(PhasefieldError, ValueError):
    """A window family fails the non-degeneracy requirement."""
