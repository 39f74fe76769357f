# isps_engine/tools/errors.py


class IspsError(ValueError):
    """Base class for every misuse error raised by the engine."""


class DomainError(IspsError):
    """Argument outside the domain of the operation (negative radius, t <= 0, ...)."""


class ClassTagError(IspsError):
    """Comparison-function class tags are incompatible with the requested operation."""


class DataError(IspsError):
    """Sampled grid violates the monotonicity it is declared to have."""


class ExtentError(IspsError):
    """Sampled grid does not cover the region an operation needs."""


class ShapeError(IspsError):
    """State or input dimension mismatch."""


class PreconditionError(IspsError):
    """Caller broke the contract of an operation."""


class ConfigurationError(IspsError):
    """Unknown name, malformed configuration or missing prerequisite data."""


class DivergenceError(IspsError):
    """State norm crossed the overflow guard during integration."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time
