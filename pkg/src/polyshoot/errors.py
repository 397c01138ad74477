"""Exception types shared across the package."""


class PolyshootError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(PolyshootError):
    """A config file or dictionary does not match the expected schema."""


class NonPositiveAlpha(PolyshootError):
    """A shooting vector violates the positivity required by the operation."""


class MassExceeded(PolyshootError):
    """A boundary point carries more mass than the simplex allows."""


class StepLimitExceeded(PolyshootError):
    """The integrator hit its step cap before reaching a terminal state."""


class StiffnessFailure(PolyshootError):
    """Adaptive step size underflowed; the controls need retuning."""


class MonotonicityViolation(PolyshootError):
    """An accepted step broke the non-increasing profile guarantee."""


class NotFound(PolyshootError):
    """Zero search exhausted its budget without certifying a solution."""

    def __init__(self, message, best_cell=None):
        super().__init__(message)
        self.best_cell = best_cell


class AllUnresolved(PolyshootError):
    """Every probed vertex came back unresolved; controls are too loose."""


class InconsistentBoundary(PolyshootError):
    """A simplex face vertex carries a label foreign to that face."""


class QuadratureFailure(PolyshootError):
    """The trajectory grid cannot support the requested integral accuracy."""


class WindowTooShort(PolyshootError):
    """The requested fitting window carries too little decay information."""
