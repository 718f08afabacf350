"""Exception hierarchy shared by all monadforge modules."""


class MonadForgeError(Exception):
    """Base class for every error raised by monadforge."""


class MalformedInputError(MonadForgeError, ValueError):
    """Raised when matrix data contains non-finite entries or cannot be parsed."""


class ShapeError(MonadForgeError, ValueError):
    """Raised when matrix shapes are inconsistent with each other."""


class ArgumentError(MonadForgeError, ValueError):
    """Raised when a scalar argument lies outside its admissible range."""


class InvalidGroupElementError(MonadForgeError, ValueError):
    """Raised when a group element is not numerically invertible."""


class PreconditionError(MonadForgeError):
    """Raised when an operation requires a valid configuration but got another.

    The offending :class:`~monadforge.configuration.ValidationReport` is kept
    on ``report`` so callers can tell degenerate from non-integrable input.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class UnsampleableError(MonadForgeError):
    """No valid configurations exist for the requested (k, n)."""


class UnsupportedRegimeError(MonadForgeError):
    """The requested (k, n) is outside the range the sampler handles."""


class SamplingFailedError(MonadForgeError):
    """Every sampling attempt produced a degenerate configuration."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class PerturbFailedError(MonadForgeError):
    """Newton retraction did not return to the integrable locus."""


class NotSmoothError(MonadForgeError):
    """The integrability map has a non-surjective differential."""
