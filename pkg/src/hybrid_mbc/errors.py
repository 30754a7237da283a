"""Exception hierarchy shared by the library and the experiment runner."""


class MbcError(Exception):
    """Base class for all errors raised by hybrid_mbc."""

    exit_code = 1


class ConfigError(MbcError, ValueError):
    """Invalid configuration or parameter value."""

    exit_code = 1


class TraceError(MbcError, ValueError):
    """Malformed, empty or otherwise unusable trajectory data."""

    exit_code = 2


class NumericalError(MbcError, ArithmeticError):
    """A factorization or solve failed even after jitter escalation."""

    exit_code = 3
