"""Exception hierarchy shared by every nsaspec module."""

from __future__ import annotations


class NsaspecError(Exception):
    """Base class for all errors raised by nsaspec."""


# linear algebra
class NotDiagonalizable(NsaspecError):
    pass


class NumericalFailure(NsaspecError):
    pass


# exponential sums
class TermBudgetExceeded(NsaspecError):
    pass


class DimensionTooLarge(NsaspecError):
    pass


class EvaluationOverflow(NsaspecError, OverflowError):
    """Raised when an exponential sum cannot be represented as a float.

    The value is still available in log form: ``log_abs`` is log|F(z)|
    and ``arg`` its phase, so callers can keep reasoning about dominance.
    """

    def __init__(self, message: str, log_abs: float, arg: float):
        super().__init__(message)
        self.log_abs = log_abs
        self.arg = arg


# system building
class DimensionMismatch(NsaspecError):
    pass


class SpectrumIsWholePlane(NsaspecError):
    """The characteristic function vanishes identically."""

    def __init__(self, message: str, expsum=None):
        super().__init__(message)
        self.expsum = expsum


class IntersectingSubspaces(DimensionMismatch, SpectrumIsWholePlane):
    """Dirichlet subspaces U, V with a common nonzero vector."""


class UnknownExample(NsaspecError, KeyError):
    pass


# hull analysis
class DegenerateSpectrum(NsaspecError):
    pass


# root finding
class BoundaryZero(NsaspecError):
    pass


# diagnostics
class NotAnEigenvalue(NsaspecError):
    pass


class DegenerateKernel(NsaspecError):
    pass


class QuadratureFailure(NsaspecError):
    pass


class InsufficientData(NsaspecError):
    pass


class NonGenericPattern(NsaspecError):
    pass


# CLI input
class SpecParseError(NsaspecError):
    pass


class SpecValidationError(NsaspecError):
    pass
