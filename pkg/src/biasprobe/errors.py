"""Exception hierarchy shared by every module."""


class BiasProbeError(Exception):
    """Base class for all errors raised by biasprobe."""


class InvalidParameter(BiasProbeError, ValueError):
    """An argument or configuration value is outside its valid range."""


class SourceExhausted(BiasProbeError, RuntimeError):
    """A recorded random stream ran out of values."""


class TraceFormatError(BiasProbeError, ValueError):
    """A trace or report file could not be parsed."""
