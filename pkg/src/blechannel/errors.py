"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Bad protocol settings, detector configuration or experiment config."""


class ClockMismatchError(TypeError):
    """Arithmetic mixed instants from different clocks without a conversion."""


class TraceOrderError(ValueError):
    """Packet timestamps moved backwards in a trace."""


class TraceParseError(ValueError):
    """A trace or model file violates its schema.

    ``line`` is the 1-based line number of the offending line, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NoDataError(ValueError):
    """An aggregate was requested over an empty input."""


class FitError(ValueError):
    """Calibration fit is impossible on the given samples."""
