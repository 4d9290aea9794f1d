"""Exception hierarchy shared across the toolkit."""


class FracstabError(Exception):
    """Base class for all toolkit errors."""


class DomainError(FracstabError, ValueError):
    """Input outside the mathematical domain of an operation."""


class AccuracyError(FracstabError, ArithmeticError):
    """Requested accuracy could not be reached.

    Carries the best error bound achieved, when one is known.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ConditioningError(FracstabError, ArithmeticError):
    """A transform exists but is too ill-conditioned to be trusted."""


class DivergenceError(FracstabError, ArithmeticError):
    """A quantity that must be finite diverges (e.g. C(alpha, A) for an
    unstable matrix)."""


class NotAnEquilibriumError(FracstabError, ValueError):
    """The supplied point is not an equilibrium of the vector field."""


class NoContractionError(FracstabError, ArithmeticError):
    """Fixed-point iteration failed to contract (q < 1 likely violated)."""


class ValidationError(FracstabError, ValueError):
    """A domain object violates one of its invariants."""


class ConfigError(FracstabError, ValueError):
    """A configuration file is malformed (syntax or unknown keys)."""
