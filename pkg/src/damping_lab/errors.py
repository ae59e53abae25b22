"""Exception types shared across the lab."""


class DampingLabError(Exception):
    """Base class for all lab errors."""


class NonFiniteValue(DampingLabError):
    """A coefficient evaluation overflowed or hit an invalid log argument."""


class GridTooShort(DampingLabError):
    """Tail behavior could not be classified on the given time grid."""


class OrderViolation(DampingLabError):
    """Time arguments violate 0 <= s <= t."""


class HypothesisNotSatisfied(DampingLabError):
    """A prerequisite hypothesis fails for the requested property."""


class BetaNotIntegrable(DampingLabError):
    """The tail of the integral of beta(t) = exp(-int b) does not converge."""


class NonMonotoneEta(DampingLabError):
    """eta(t) = b(t)/2 is not monotone on the search interval."""


class StepUnderflow(DampingLabError):
    """The adaptive integrator could not meet its tolerance."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DomainViolation(DampingLabError):
    """A sample lies outside a bound's zone of validity."""


class QuadratureDivergence(DampingLabError):
    """A radial frequency quadrature tail did not converge."""


class WindowTooEarly(DampingLabError):
    """A log-log fit window is pre-asymptotic (residual too large)."""


class CflViolation(DampingLabError):
    """Time step exceeds the CFL-type budget of the spatial solver."""


class BoxBudgetExceeded(DampingLabError):
    """Advancing past T_final would break the finite-propagation budget."""


class HistoryGap(DampingLabError):
    """Source history grid is too coarse for the requested quadrature."""


class IterationDiverged(DampingLabError):
    """A Picard iterate escaped the configured norm budget."""


class ConfigInvalid(DampingLabError):
    """A scenario configuration failed validation."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
