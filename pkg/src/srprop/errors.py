"""Exception types raised across the package."""


class ContractError(ValueError):
    """An argument violates a documented precondition (shape, length, range)."""


class DomainError(ValueError):
    """A numeric input lies outside the function's domain (NaN, inf, ...)."""


class ModelFormatError(ValueError):
    """A serialized model or data file could not be parsed."""

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)


class FitError(RuntimeError):
    """The ALS problem is ill-posed for the given data and configuration."""


class RankDeficiencyError(FitError):
    """A least-squares subproblem has a singular regression matrix."""


class NumericalError(FitError):
    """A non-finite value appeared during fitting."""


class PropagationError(RuntimeError):
    """The integrator could not reach the requested final time.

    ``last_state`` holds the last accepted state and ``last_time`` its epoch.
    """

    def __init__(self, message, last_time=None, last_state=None):
        super().__init__(message)
        self.last_time = last_time
        self.last_state = last_state


class ImpactError(PropagationError):
    """A trajectory dropped below the Earth's surface."""


class SingularityError(ValueError):
    """An element conversion hit a coordinate singularity."""


class ConfigError(ValueError):
    """A scenario configuration is malformed or inconsistent."""


class FrameDegenerateError(ValueError):
    """Position and velocity are parallel, so no orbital frame exists."""


class DecompositionError(ValueError):
    """A covariance matrix is not positive semidefinite."""


class IterationError(RuntimeError):
    """An iterative solver failed to converge."""
