"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class RigidityError(Exception):
    """Base class for all library errors."""


class InputError(RigidityError, ValueError):
    """Malformed or out-of-contract input data (CLI exit code 2)."""


class PreconditionError(InputError):
    """A named hypothesis of an operation does not hold for the supplied data."""

    def __init__(self, message, failed=None):
        super().__init__(message)
        self.failed = failed


class UncoveredRegimeError(InputError):
    """The requested case/level combination is outside the covered regime."""


class DomainError(RigidityError):
    """Arithmetically possible input that lies outside the geometric regime (exit 1)."""


class CertificateError(RigidityError):
    """A certificate failed to re-verify (exit 1)."""

    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending
