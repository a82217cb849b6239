"""Exception hierarchy shared by every module."""


class ChanmixError(Exception):
    """Base class for all package errors."""


class CapacityError(ChanmixError):
    """A requested size exceeds what the simulator or oracle supports."""


class DegenerateDecompositionError(ChanmixError, ValueError):
    """A mixture denominator vanishes for the requested angle offsets."""


class OutOfRegimeError(ChanmixError, ValueError):
    """An input lies outside the regime where a formula is valid."""


class UnsupportedError(ChanmixError, NotImplementedError):
    """The operation is well defined but deliberately not supported."""


class CompileError(ChanmixError, ValueError):
    """A circuit contains a gate the compiler cannot rewrite."""


class ConfigError(ChanmixError, ValueError):
    """Invalid experiment configuration; the message names the field path."""
