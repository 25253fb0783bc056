"""Exception types shared across the engine."""


class RailguardError(Exception):
    """Base class for all engine errors."""


class ParseError(RailguardError):
    """A wire-format or config document could not be decoded."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(ParseError):
    """A decoded record violates the schema (missing/extra/out-of-range fields)."""


class OrderError(ParseError):
    """Frame ordering invariant broken (frame_index or timestamp regression)."""


class InvalidResample(RailguardError, ValueError):
    """Resampling target is empty or exceeds the source frame count."""


class InvalidCalibration(RailguardError, ValueError):
    """Calibration violates its invariants (non-positive scale, singular matrix)."""


class HorizonError(RailguardError):
    """Image point maps to the vanishing line; no ground-plane position exists."""


class RangeError(RailguardError, ValueError):
    """A report value is outside its permitted range."""
