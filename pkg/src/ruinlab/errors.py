"""Exception hierarchy shared by every ruinlab module."""


class RuinlabError(Exception):
    """Base class for all ruinlab errors."""


class DomainError(RuinlabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DivergenceError(DomainError):
    """Utility is unbounded below at the requested point (e.g. log(0))."""


class ConfigurationError(RuinlabError, ValueError):
    """Invalid static configuration (grid bounds, instance sizes, keys)."""


class ConstraintError(RuinlabError, ValueError):
    """A model precondition such as ``c >= b`` is violated."""


class InapplicableError(RuinlabError, ValueError):
    """A bound is requested outside the regime where it holds."""


class ThresholdError(InapplicableError):
    """Horizon too short for the concentration bound to apply."""

    def __init__(self, message, t_min):
        super().__init__(message)
        self.t_min = t_min


class NonConvergenceError(RuinlabError, RuntimeError):
    """Value iteration stopped at ``max_iterations`` above tolerance."""

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ResourceError(RuinlabError):
    """A brute-force search would exceed its evaluation budget."""
