"""Exception hierarchy shared by the numerical modules and the CLI."""


class GeoComplexityError(Exception):
    """Base class for all library errors."""


class InvalidInputError(GeoComplexityError, ValueError):
    pass


class NotPositiveDefiniteError(GeoComplexityError, ValueError):
    pass


class RankDeficientError(NotPositiveDefiniteError):
    pass


class InsufficientDataError(InvalidInputError):
    pass


class ConstraintViolationError(GeoComplexityError, ValueError):
    pass


class DegenerateModelError(GeoComplexityError, ValueError):
    pass


class DomainError(GeoComplexityError, ValueError):
    pass


class ResourceLimitError(GeoComplexityError, RuntimeError):
    pass


class AccuracyError(GeoComplexityError, RuntimeError):
    """Raised when an adaptive scheme fails to converge.

    The best estimate reached is kept on ``estimate``.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class NoInteriorMaximumError(DegenerateModelError):
    """The Hessian at the candidate maximum is not negative definite."""


class InfiniteLossError(DegenerateModelError):
    """An observed outcome has zero probability under the model."""
