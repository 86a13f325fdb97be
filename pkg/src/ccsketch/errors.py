"""Exception hierarchy shared across the package."""


class CCSketchError(Exception):
    """Base class for every error raised by ccsketch."""


class ParameterError(CCSketchError, ValueError):
    """Invalid alpha, beta, k, dimension or similar configuration."""


class UnsupportedAlphaError(ParameterError):
    """Alpha is not one of the tabulated optimal-quantile grid points."""


class DomainError(CCSketchError, ValueError):
    """A formula was evaluated outside the region where it is defined."""


class DegenerateSketchError(CCSketchError, ValueError):
    """A projected sample is exactly zero, so log-space estimators fail."""


class IncompatibleSketchError(CCSketchError, ValueError):
    """Two sketches built with different parameters cannot be combined."""


class SketchIndexError(CCSketchError, IndexError):
    """An update index falls outside ``[0, dimension)``."""


class FormatError(CCSketchError, ValueError):
    """A serialized sketch is truncated, corrupted or of an unknown version."""


class DataError(CCSketchError, ValueError):
    """Malformed or invalid input data; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParseError(DataError):
    pass


class ValidationError(DataError):
    pass
