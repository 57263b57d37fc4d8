"""Shared exception types for the platform.

Every service module raises subclasses of :class:`PlatformError` so callers
(HTTP layer, simulator, tests) can distinguish rejection reasons without
string matching.
"""


class PlatformError(Exception):
    """Base class for all platform-level errors."""


class Malformed(PlatformError):
    """Structurally invalid input (empty ids, bad payload shape)."""


class NotFound(PlatformError):
    """Requested entity / record does not exist."""


class StaleUpdate(PlatformError):
    """Attribute update older than the stored observation was rejected."""


class Unauthorized(PlatformError):
    """Device credentials did not match the registry."""


class DuplicateDevice(PlatformError):
    """A (api_key, device_id) pair was registered twice."""


class UnknownSeries(NotFound):
    """History query against a series that holds no points."""


class NonNumeric(PlatformError):
    """Numeric aggregation requested over a categorical series."""


class NotConfigured(PlatformError):
    """Device-local configuration (home network) missing."""


class Offline(PlatformError):
    """A required online lookup failed; the triggering fix is discarded."""


class Unordered(PlatformError):
    """Input stream violated its time-ordering precondition."""


class EmptyWindow(PlatformError):
    """Aggregate over an empty sample window."""


class Expired(PlatformError):
    """Answer submitted after the prompt's 24 h validity."""


class ValidationFailed(PlatformError):
    """Answer payload violates the questionnaire's validation rules."""


class UnknownPrompt(NotFound):
    """Answer references a prompt id that is not pending."""


class ParseError(PlatformError):
    """A data file failed to parse; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class InvalidInput(PlatformError):
    """NaN / negative / out-of-domain numeric input."""


class InsufficientOverlap(PlatformError):
    """Too few overlapping dates to correlate two series."""


class OutOfSpan(PlatformError):
    """Date outside the configured scenario span."""


class ConfigError(PlatformError):
    """Scenario configuration failed validation."""
