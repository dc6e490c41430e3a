"""Exception hierarchy shared across the toolkit."""


class BoxvelError(Exception):
    """Base class for all toolkit errors."""


class DomainError(BoxvelError, ValueError):
    """Input is outside the geometric domain (e.g. point behind the camera)."""


class ValidationError(BoxvelError, ValueError):
    """Malformed value: degenerate box, wrong track length, bad config."""


class FitError(BoxvelError, RuntimeError):
    """Statistical fit cannot be performed (too few samples, rank deficiency)."""


class DataError(BoxvelError, RuntimeError):
    """Problem with an input file or record stream."""


class CheckpointError(BoxvelError, RuntimeError):
    """Model checkpoint is corrupt, truncated or has an unsupported version."""


class NumericError(BoxvelError, RuntimeError):
    """Numerical failure during optimization (NaN/Inf loss)."""
