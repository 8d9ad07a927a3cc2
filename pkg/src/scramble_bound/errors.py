"""Exception hierarchy."""


class ScrambleError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDimensionError(ScrambleError, ValueError):
    pass


class NotHermitianError(ScrambleError, ValueError):
    pass


class NotPSDError(ScrambleError, ValueError):
    pass


class DegenerateFidelityError(ScrambleError, ValueError):
    pass


class PreconditionError(ScrambleError, ValueError):
    pass


class RangeOverflowError(ScrambleError, OverflowError):
    pass


class ConsistencyError(ScrambleError, RuntimeError):
    pass


class QuadratureError(ScrambleError, RuntimeError):
    pass


class LineError(ScrambleError, ValueError):
    """An error tied to a line of an input document."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(LineError):
    pass


class SpectrumFormatError(LineError):
    pass


class SweepError(ScrambleError):
    """Wraps an error raised while evaluating a sweep at time ``t``."""

    def __init__(self, message, t):
        self.t = t
        super().__init__(f"{message} (at t={t!r})")
