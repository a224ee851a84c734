"""Exception hierarchy shared by all modules."""


class NcdstbcError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(NcdstbcError, ValueError):
    """Operand shapes are incompatible."""


class SingularMatrixError(NcdstbcError, ArithmeticError):
    """Factorization hit a zero or non-positive pivot."""


class ConstructionError(NcdstbcError, ValueError):
    """A code ingredient cannot be built for the requested parameters."""


class ContractViolation(NcdstbcError, ValueError):
    """An input breaks a documented precondition (e.g. decoder constraint)."""


class ConfigurationError(NcdstbcError, ValueError):
    """Invalid experiment or code configuration."""


class SweepError(ConfigurationError):
    """The power sweep does not bracket the requested BLER target."""
