"""Exception hierarchy shared by all modules."""


class AAReduceError(Exception):
    """Base class for every error raised by :mod:`aareduce`."""


class DimensionError(AAReduceError, ValueError):
    """Raised when operand shapes are incompatible."""


class RankError(AAReduceError, ValueError):
    """Raised when a matrix expected to have full column rank does not.

    The detected numerical rank is kept in :attr:`rank`.
    """

    def __init__(self, msg, rank):
        super().__init__(msg)
        self.rank = rank


class ConvergenceError(AAReduceError, RuntimeError):
    """Raised when an iterative kernel (the eigensolver) fails."""


class DomainError(AAReduceError, ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class WindowError(AAReduceError, ValueError):
    """Raised when shifted signals do not overlap enough to be compared."""


class AccuracyError(AAReduceError, RuntimeError):
    """Raised when a numerical self-check exceeds its tolerance.

    ``residual`` and ``threshold`` carry the failing numbers.
    """

    def __init__(self, msg, residual, threshold):
        super().__init__(msg)
        self.residual = residual
        self.threshold = threshold


class HypothesisError(AAReduceError):
    """Raised when an operation refuses to run because its hypotheses fail.

    The offending :class:`~aareduce.subspaces.HypothesisReport` (or a
    description of the failed precondition) is attached as :attr:`report`.
    """

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report
