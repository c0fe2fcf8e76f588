"""Exception hierarchy shared by the engines and the command line."""


class IRBoundError(Exception):
    """Base class for all errors raised by :mod:`irbound`."""


class ParameterError(IRBoundError, ValueError):
    """Coupling or model parameters outside their admissible range."""


class ConvergenceError(IRBoundError, RuntimeError):
    """A truncation or quadrature tolerance could not be met."""


class ConfigError(IRBoundError, ValueError):
    """A check was requested outside the hypotheses under which it holds."""


class ResourceError(IRBoundError, MemoryError):
    """The requested Hilbert space exceeds the configured dimension cap."""


class DomainError(IRBoundError, ValueError):
    """A quantity was requested where it is undefined (e.g. a divergent integral)."""
