"""Exception types raised across the package."""


class MagtorusError(Exception):
    """Base class for all package errors."""


class AmbiguousLift(MagtorusError):
    """Consecutive loop samples jump by >= 1/2 in some coordinate."""


class Resonant(MagtorusError):
    """The field cannot be certified non-resonant for the requested period."""


class NotAlmostComplex(MagtorusError):
    pass


class NotCompatible(MagtorusError):
    pass


class StepSizeUnderflow(MagtorusError):
    pass


class NotPeriodic(MagtorusError):
    pass


class NonContractible(MagtorusError):
    pass


class NotCritical(MagtorusError):
    pass


class NotConverged(MagtorusError):
    pass


class InconsistentNullity(MagtorusError):
    pass


class LineSearchStall(MagtorusError):
    pass


class DegenerateOrbitPresent(MagtorusError):
    pass


class ConfigError(MagtorusError):
    """Invalid run configuration; the message names the offending key."""
