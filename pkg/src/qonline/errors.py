"""Exception hierarchy shared by all qonline modules."""

from __future__ import annotations


class QOnlineError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(QOnlineError, ValueError):
    """A component was wired or parameterised incorrectly."""


class ValidationError(QOnlineError, ValueError):
    """An instance, parameter set or output violates its invariants."""


class DomainError(QOnlineError, ValueError):
    """A function was applied outside of its domain."""


class PreconditionError(QOnlineError, ValueError):
    """An operation was called with arguments it does not accept."""


class ProtocolError(QOnlineError, RuntimeError):
    """A streaming or advice protocol was violated during execution."""


class DecodeIntegrityError(QOnlineError, RuntimeError):
    """A superdense-coded pair was not in one of the four encoded states."""


class BranchCapExceeded(QOnlineError, RuntimeError):
    """Exact enumeration produced more branches than allowed."""


class CapacityError(QOnlineError, RuntimeError):
    """A search space is larger than the configured capacity."""


class SearchFailure(QOnlineError, RuntimeError):
    """A randomized search exhausted its retries."""


__all__ = [
    "BranchCapExceeded",
    "CapacityError",
    "ConfigurationError",
    "DecodeIntegrityError",
    "DomainError",
    "PreconditionError",
    "ProtocolError",
    "QOnlineError",
    "SearchFailure",
    "ValidationError",
]
