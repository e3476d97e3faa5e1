"""Semantic exception hierarchy shared by all smalldev modules."""


class SmallDevError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(SmallDevError, ValueError):
    """Inputs violate a documented precondition (domain, shape, range)."""


class SizeError(ArgumentError):
    """An instance is too large for exact enumeration."""


class NumericalError(SmallDevError, RuntimeError):
    """A numerical routine failed to produce a trustworthy result."""


class NoCrossingError(NumericalError):
    """A bracketing search found no sign change on the given interval."""


class CertificateError(NumericalError):
    """A dual certificate could not be restored or failed re-verification."""


class BoundViolationError(SmallDevError):
    """A claimed probability bound was violated by an exact computation.

    Carries the verification report (with offending instances serialized)
    as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
