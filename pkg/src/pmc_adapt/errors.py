"""Exception hierarchy shared by all modules."""


class PMCError(Exception):
    """Base class for every error raised by this package."""


class InvalidWeight(PMCError, ValueError):
    """A log weight is NaN or +inf."""


class AllWeightsZero(PMCError):
    """Every importance weight is zero (proposal misses the target entirely).

    When raised from inside :func:`pmc_adapt.pmc.run`, ``partial_trace`` holds
    the trace recorded up to the failing iteration.
    """

    def __init__(self, message="all importance weights are zero", partial_trace=None):
        super().__init__(message)
        self.partial_trace = partial_trace


class InvalidWeights(PMCError, ValueError):
    """A weight vector is not on the probability simplex."""


class NotSPD(PMCError, ValueError):
    """A covariance matrix failed its Cholesky factorization."""


class LengthMismatch(PMCError, ValueError):
    pass


class InvalidParameter(PMCError, ValueError):
    pass


class NoSampler(PMCError, ValueError):
    """A distribution without an exact sampler or known normalizer was used
    where both are required."""


class Degenerate(PMCError, ValueError):
    """The Poisson table MLE is at infinity (a zero margin)."""


class UnknownNormalizer(PMCError, ValueError):
    pass


class DegeneratePair(PMCError, ValueError):
    """A pair has zero mixture density under every kernel."""


class NonMonotone(PMCError):
    """An exact evaluator saw the entropy criterion decrease along F iterates."""


class WrongDimension(PMCError, ValueError):
    pass


class NotConverged(PMCError):
    pass


class AllKernelsIdentical(PMCError, ValueError):
    pass


class ConfigError(PMCError, ValueError):
    """Invalid experiment configuration; ``errors`` lists field-level messages."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
