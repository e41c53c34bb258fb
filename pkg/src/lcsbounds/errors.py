"""Exception types shared across the package."""


class LCSBoundsError(Exception):
    """Base class for all package errors."""


class InvalidInputError(LCSBoundsError, ValueError):
    """An argument is outside the domain of the operation."""


class CapacityError(LCSBoundsError):
    """The requested instance does not fit the configured memory or disk."""

    def __init__(self, message, required_bytes=None):
        super().__init__(message)
        self.required_bytes = required_bytes


class ConfigurationError(LCSBoundsError, ValueError):
    """Run configuration cannot be satisfied (e.g. a memory budget that is too small)."""


class StoreIOError(LCSBoundsError, OSError):
    """A vector-store transfer was short, out of range or otherwise failed."""
