"""Exception hierarchy shared by all povmlab modules."""


class PovmLabError(Exception):
    """Base class for every error raised by povmlab."""


class DimensionError(PovmLabError, ValueError):
    """Shapes, labels or dimensions do not fit together."""


class PreconditionError(PovmLabError, ValueError):
    """An operation was called on inputs violating its stated precondition."""


class UnsupportedDeviceError(PovmLabError, TypeError):
    """The requested operation is undefined for this kind of device."""


class RankDeficientError(PovmLabError, ValueError):
    """Sample set does not determine an affine functional uniquely."""


class NotMaximalError(PovmLabError, ValueError):
    """Born extraction requested for a measurement with K != N outcomes."""


class CertaintyViolatedError(PovmLabError, ValueError):
    """A supposed certainty state does not give its outcome with probability one."""


class SpecError(PovmLabError, ValueError):
    """A device spec or experiment config file is malformed."""
