"""Exception types shared across the package."""


class InconsistentMeshError(ValueError):
    """A boundary edge could not be assigned to any wall."""


class SingularMatrixError(RuntimeError):
    """LU factorization hit an exactly singular pivot."""

    def __init__(self, message, pivot_index=-1):
        super().__init__(message)
        self.pivot_index = pivot_index


class DegenerateBreedingError(RuntimeError):
    """Control and perturbed trajectories coincided during breeding."""


class StartupFailureError(RuntimeError):
    """Picard iteration of the trapezoidal startup step did not converge."""


class TimestepUnderflowError(RuntimeError):
    """Repeated halving drove the timestep below the configured minimum."""


class MaxStepsExceededError(RuntimeError):
    """A run hit its step budget before reaching its stopping condition."""
