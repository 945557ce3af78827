"""Exception types shared across the package."""


class BundleFormatError(Exception):
    """Raised when an on-disk bundle directory is malformed.

    Messages name the offending file and, where meaningful, the byte offset.
    """


class ValidationError(ValueError):
    """Raised when in-memory data violates a documented precondition."""
