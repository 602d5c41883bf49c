"""Exception hierarchy shared by the numerical modules and the CLI."""


class LVFrontsError(Exception):
    """Base class for all library errors."""


class InvalidInputError(LVFrontsError, ValueError):
    """Non-finite or malformed numerical input."""


class ConfigError(LVFrontsError):
    """Configuration file or override could not be parsed or validated."""


class PreconditionError(LVFrontsError, ValueError):
    """An operation was called outside its domain of validity."""


class AssumptionError(LVFrontsError):
    """The coefficient set violates the standing structural assumptions."""


class NumericalError(LVFrontsError, RuntimeError):
    """Base for failures of a numerical procedure."""


class ConvergenceError(NumericalError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class ZeroSpeedError(NumericalError):
    def __init__(self, message, speed=0.0):
        super().__init__(message)
        self.speed = speed


class BlowUpError(NumericalError):
    """The explicit reaction part produced a non-finite or exploding state."""


class RegimeError(NumericalError):
    """A quantity was requested in a parameter regime where it does not exist."""


class ConsistencyError(NumericalError):
    """An internal self-check (periodicity, identity) failed."""
