"""Exception types shared across the library.

Every certified operation fails loudly with one of these rather than
returning a silently-unsound value.
"""


class HypflowError(Exception):
    """Base class for all library errors."""


class DivisorContainsZero(HypflowError):
    """Ball division where the divisor ball straddles zero."""


class NotCertifiablyInvertible(HypflowError):
    """Residual certificate for a matrix inverse could not be established."""


class PrecisionUnreachable(HypflowError):
    """Requested enclosure radius not reached within the precision budget."""


class SchemaError(HypflowError):
    """Malformed document or system file."""


class DimensionMismatch(HypflowError):
    """Operands or inputs with incompatible dimensions."""


class NotAnEquilibrium(HypflowError):
    """The requested base point does not zero the vector field."""


class NotHyperbolic(HypflowError):
    """An eigenvalue enclosure still straddles the imaginary axis at budget."""


class ResolventUncertifiable(HypflowError):
    """Contour subdivision exhausted without certifying the resolvent."""


class RegimeViolation(HypflowError):
    """Semigroup component requested outside its decaying time regime."""


class QuadratureBudgetExceeded(HypflowError):
    """Validated quadrature could not meet the tolerance within budget."""


class MonitorViolation(HypflowError):
    """A certified runtime inequality failed beyond its slack."""


class HorizonTooShort(HypflowError):
    """Tail truncation bound exceeds the error budget at the requested horizon."""


class LeftBoundingBox(HypflowError):
    """Trajectory left the bounding box; carries the exit time."""

    def __init__(self, t_exit, state=None):
        super().__init__(f"trajectory left the bounding box at t = {t_exit}")
        self.t_exit = t_exit
        self.state = state


class StepUnderflow(HypflowError):
    """Adaptive integrator step size collapsed below the floor."""


class EmptySet(HypflowError):
    """Operation on an empty cover or set."""


class LevelTooLarge(HypflowError):
    """Cover level outside the supported range."""


class OutsideUnitSquare(HypflowError):
    """Point handed to a membership test lies outside the unit square."""
