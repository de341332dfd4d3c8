"""Exception hierarchy.

Every error raised on purpose by the library derives from ``LacunaError`` so
callers (and the CLI exit-code contract) can catch one type.
"""


class LacunaError(ValueError):
    pass


class DimensionMismatch(LacunaError):
    pass


class NotStartingAtZero(LacunaError):
    pass


class NotStrictlyIncreasing(LacunaError):
    pass


class BadGeneratorParam(LacunaError):
    pass


class OutOfHorizon(LacunaError):
    pass


class HorizonTooShort(LacunaError):
    pass


class BadExponent(LacunaError):
    pass


class EmptyBattery(LacunaError):
    pass


class PrefixExhausted(LacunaError):
    pass


class NotMonotone(LacunaError):
    pass


class LacunaryWarning(UserWarning):
    """Emitted when a finite cutoff prefix shows no growth in block length."""
