"""Exception types shared across the package."""


class ConsensusError(Exception):
    """Base class for all package errors."""


class DimensionError(ConsensusError, ValueError):
    pass


class WeightError(ConsensusError, ValueError):
    pass


class UnsupportedSpaceError(ConsensusError, TypeError):
    pass


class GridError(ConsensusError, ValueError):
    pass


class MatrixError(ConsensusError, ValueError):
    pass


class ParameterError(ConsensusError, ValueError):
    pass


class DomainError(ConsensusError, ValueError):
    pass


class ConfigError(ConsensusError, ValueError):
    """Raised for invalid scenario configuration.

    ``violations`` holds ``(field_path, message)`` pairs so callers can
    report every problem at once.
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class ConvergenceError(ConsensusError, RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
