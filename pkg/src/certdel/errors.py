class CertdelError(Exception):
    """Base class for package errors."""


class UsageError(CertdelError, ValueError):
    """An operation was called with arguments violating its preconditions."""


class ProtocolOrderError(CertdelError):
    """A party acted out of schedule."""


class ResourceError(CertdelError):
    """A computation would exceed a configured size cap."""


class InfeasibleParameters(CertdelError):
    """No parameter choice satisfies the requested constraints."""
