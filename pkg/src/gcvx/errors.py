"""Exception types raised across the package."""


class GcvxError(Exception):
    """Base class for all package errors."""


class NonFinite(GcvxError, ValueError):
    pass


class CapExceeded(GcvxError, ValueError):
    pass


class PoleExceeded(GcvxError, ValueError):
    pass


class EmptyInput(GcvxError, ValueError):
    pass


class LengthMismatch(GcvxError, ValueError):
    pass


class CouplingUnsupported(GcvxError, ValueError):
    pass


class UnsupportedComposite(GcvxError, TypeError):
    pass


class StepRuleUnresolvable(GcvxError, ValueError):
    pass


class ConfigInvalid(GcvxError, ValueError):
    pass


class RenormalizationDrift(GcvxError, RuntimeError):
    """A returned point drifted off its constraint set by more than 1e-6."""


class Diverged(GcvxError, RuntimeError):
    """Solver blew up; ``trace`` holds everything recorded before the abort."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class InnerBudgetExceeded(GcvxError, RuntimeError):
    def __init__(self, message, outer_step=None, inner_calls=None, residual_sq=None, target=None, trace=None):
        super().__init__(message)
        self.outer_step = outer_step
        self.inner_calls = inner_calls
        self.residual_sq = residual_sq
        self.target = target
        self.trace = trace
