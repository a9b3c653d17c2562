"""Exception and warning types raised across the package."""


class NlsLabError(Exception):
    """Base class for all package errors."""


class UsageError(NlsLabError):
    pass


class UnsupportedDimension(NlsLabError):
    pass


class NumericalOverflow(NlsLabError, OverflowError):
    pass


class NoBracket(NlsLabError):
    pass


class TailDivergence(NlsLabError):
    pass


class IdentityViolation(NlsLabError):
    pass


class TechnicalRestriction(NlsLabError):
    pass


class PreconditionFailed(NlsLabError, ValueError):
    pass


class InsufficientSamples(NlsLabError):
    pass


class FitIllConditioned(NlsLabError):
    pass


class ZeroField(NlsLabError):
    pass


class NotSupercritical(NlsLabError, ValueError):
    pass


class AuditFailure(NlsLabError):
    def __init__(self, failures):
        self.failures = list(failures)
        lines = [f"{name}: residual {res:.3e}" for name, res in self.failures]
        super().__init__("audit failed -> " + "; ".join(lines))


class CancellationFailure(NlsLabError):
    def __init__(self, name, residual):
        self.name = name
        self.residual = residual
        super().__init__(f"{name} pair does not cancel: relative residual {residual:.3e}")


class TailNotResolved(UserWarning):
    """The outer decade of the radial domain carries a non-negligible share of a moment."""
