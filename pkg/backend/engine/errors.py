"""
Exception hierarchy for the lab engine
"""


class LabError(Exception):
    """Base class for every error raised by the engine"""


class ExponentError(LabError, ValueError):
    """Exponent text could not be parsed, or the value lies below 1"""


class DimensionError(LabError, ValueError):
    """Vector length, arity or matrix shape does not match"""


class FieldError(LabError, TypeError):
    """Real and complex data were mixed, or the engine needs a real form"""


class GuardExceeded(LabError, RuntimeError):
    """Instance is too large for dense storage or vertex enumeration"""


class DomainError(LabError, ValueError):
    """Operation called outside the parameter region where it is defined"""
