"""Exception types shared across the toolkit."""


class TraceVerifyError(Exception):
    """Base class for all toolkit errors."""


class TraceFormatError(TraceVerifyError):
    """Malformed trace file (reported with a line number)."""


class ModelFormatError(TraceVerifyError):
    """Malformed or inconsistent explicit-state model."""


class PredicateError(TraceVerifyError):
    """Predicate parse or evaluation failure."""


class PropertyError(TraceVerifyError):
    """Property parse failure or out-of-range threshold."""


class ConfigError(TraceVerifyError):
    """Invalid configuration value."""


class SamplerError(TraceVerifyError):
    """A sampler failed to produce a trace."""


class SolverError(TraceVerifyError):
    """Numerical solver did not converge; carries the residual in the message."""
