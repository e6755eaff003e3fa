"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands live in spaces of different dimension."""


class MassMismatchError(ValueError):
    """Two measures that must carry equal total mass do not."""


class InstanceTooLargeError(ValueError):
    """An exhaustive oracle was asked to solve an instance beyond its limit."""


class ValidationError(ValueError):
    """An operator family or operator-valued measure fails its invariants."""


class ConvergenceError(RuntimeError):
    """A fixed-point iteration hit ``max_iter`` before reaching tolerance.

    The last residual is kept on the exception so callers can report it.
    """

    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = list(history or [])
