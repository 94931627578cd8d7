"""Exception types shared across the package."""


class EcbcError(Exception):
    """Base class for all package errors."""


class ValidationError(EcbcError, ValueError):
    """Invalid user input: bad domain, malformed file, inconsistent shapes."""


class InvariantError(EcbcError, RuntimeError):
    """An internal mathematical invariant was violated (indicates a bug)."""


class TiesWarning(UserWarning):
    """Emitted when tied values are encountered in rank transforms."""
