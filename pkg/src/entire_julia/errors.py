"""Exception types raised across the package."""


class DomainError(ValueError):
    """A parameter lies outside the domain an operation is defined on."""


class ScheduleError(RuntimeError):
    """A built schedule violates one of the growth inequalities it must satisfy."""


class FeasibilityError(ValueError):
    """The requested schedule depth is beyond what sampling or precision supports."""


class OutOfRange(ValueError):
    """A point lies beyond the radius the schedule can certify."""


class PrecisionLoss(RuntimeError):
    """Accumulated phase error made a computation unreliable."""


class ResolutionError(ValueError):
    """A requested scale is finer than the data can resolve."""


class InsufficientScales(ValueError):
    """Too few scales for a regression fit."""


class NoBracket(RuntimeError):
    """No sign change of the growth exponent among the tested alphas."""


class Unreachable(ValueError):
    """A target dimension is outside the range the estimator attains."""

    def __init__(self, s, attainable=None):
        self.s = s
        self.attainable = attainable
        msg = f"target dimension {s} is unreachable"
        if attainable is not None:
            msg += f" (attainable range ~[{attainable[0]:.4f}, {attainable[1]:.4f}])"
        super().__init__(msg)
