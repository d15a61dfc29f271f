"""Exception hierarchy shared across the package."""


class Nsfp1Error(Exception):
    """Base class for all package errors."""


class VacuumError(Nsfp1Error, ValueError):
    """Raised when ``1 + rho`` reaches zero (or the vacuum guard)."""


class ShapeMismatchError(Nsfp1Error, ValueError):
    pass


class RepresentationError(Nsfp1Error, ValueError):
    pass


class ConsistencyError(Nsfp1Error):
    """Closed-form expression disagrees with an independent numeric evaluation."""


class HurwitzMismatchError(ConsistencyError):
    pass


class StabilityError(Nsfp1Error):
    """A Hurwitz determinant was found non-positive."""


class RootFindingError(Nsfp1Error):
    pass


class UnresolvedBandError(Nsfp1Error, ValueError):
    pass


class DegenerateWindowError(Nsfp1Error, ValueError):
    pass


class NumericalAbort(Nsfp1Error):
    """Runtime abort of a time integration (NaN or vacuum breach)."""
