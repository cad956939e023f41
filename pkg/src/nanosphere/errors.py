"""Exception hierarchy shared by every module."""


class NanosphereError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(NanosphereError, ValueError):
    """An input lies outside the domain of an operation."""


class UnitError(DomainError):
    """Dimensionless and SI quantities were mixed."""


class StabilityError(NanosphereError):
    """No steady state exists (non-Hurwitz drift or undetectable pair)."""


class NumericalError(NanosphereError, ArithmeticError):
    """A numerical routine failed to converge or produced non-finite values."""


class ConfigError(DomainError):
    """A run configuration is malformed or names an unknown key."""
