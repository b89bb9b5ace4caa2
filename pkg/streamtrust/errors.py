"""Exception types shared across the monitor, codecs and CLI."""


class StreamTrustError(Exception):
    """Base class for all stream-trust failures."""


class DimensionMismatchError(StreamTrustError, ValueError):
    """A posterior or feature vector does not match the configured size."""

    def __init__(self, message: str, index: int | None = None):
        if index is not None:
            message = f"step {index}: {message}"
        super().__init__(message)
        self.index = index


class RecordFormatError(StreamTrustError, ValueError):
    """A stream or decisions file line could not be parsed or validated."""

    def __init__(self, message: str, index: int):
        super().__init__(f"record {index}: {message}")
        self.index = index


class InsufficientHistoryError(StreamTrustError, IndexError):
    """A lag reaches further back than the window currently holds."""


class FeaturesDisabledError(StreamTrustError, ValueError):
    """Feature stability was requested on a window configured without features."""


class DegenerateDevSetError(StreamTrustError, ValueError):
    """The development set cannot support a two-class fit."""


class NoDropEventsError(StreamTrustError, ValueError):
    """Drop-detection scoring was requested on a stream without drop events."""


class AlignmentError(StreamTrustError, ValueError):
    """Two series that must be step-aligned have different lengths or indices."""
