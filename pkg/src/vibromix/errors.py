"""Exception types shared across the package."""


class VibromixError(Exception):
    """Base class for all package-specific errors."""


class RangeError(VibromixError, ValueError):
    """A time window or index fell outside the valid range."""


class DesignError(VibromixError, ValueError):
    """Filter specification cannot be realized at the given rate."""


class ContractError(VibromixError, ValueError):
    """An operation was called in violation of its preconditions."""


class BuildError(VibromixError, ValueError):
    """Pipeline configuration is invalid or a source is unreachable."""


class WavFormatError(VibromixError, ValueError):
    """Malformed RIFF/WAV data.

    ``offset`` is the byte position at which parsing failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class SchemaError(VibromixError, ValueError):
    """A file did not match its required schema (columns, fields, ...)."""
