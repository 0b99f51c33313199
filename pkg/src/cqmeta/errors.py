"""Exception types raised by cqmeta."""


class InvariantError(ValueError):
    """An operator or object violates one of its structural invariants."""


class NotHermitianError(InvariantError):
    pass


class DimensionMismatchError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """The iterative POVM solver did not reach a certified optimum."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NotSymmetricError(ValueError):
    """F/G functionals differ across codewords beyond tolerance."""


class DecoderUnavailableError(RuntimeError):
    """No projective decoder could be built from a common residual eigenbasis.

    Use :func:`cqmeta.mary.solve_optimal_povm` instead.
    """


class NumericalError(RuntimeError):
    """Two routes to the same quantity disagree beyond tolerance."""
