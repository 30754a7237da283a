"""Hybrid Gaussian-process / constant-velocity model-based communication simulator."""

__version__ = "0.1.0"

from .errors import ConfigError, MbcError, NumericalError, TraceError  # noqa: E402

__all__ = ["__version__", "MbcError", "ConfigError", "TraceError", "NumericalError"]
