"""
Exception hierarchy for rmt

Each error also derives from the builtin that callers would naturally catch.
"""


class RMTError(Exception):
    """Base class for all rmt errors"""


class ConfigError(RMTError, ValueError):
    """Invalid law, mixture, ensemble, target or experiment descriptor"""


class DimensionMismatchError(RMTError, ValueError):
    """Operands of different dimension"""


class AsymmetricMatrixError(RMTError, ValueError):
    """A matrix expected to be symmetric is not"""


class EnumerationGuardError(RMTError, ValueError):
    """Path enumeration would exceed the configured n**k guard"""


class EmptySequenceError(RMTError, ValueError):
    """Statistic requested on an empty sequence"""


class DensityUndefinedError(RMTError, ValueError):
    """Density queried at a point where it is not guaranteed finite"""


class ConvergenceError(RMTError, RuntimeError):
    """Numerical iteration failed to converge or violated its invariants"""
