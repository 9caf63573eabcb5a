"""Exception hierarchy.

Physics errors (instability, non-physical states) and numerical failures
(root finding, step-size collapse) are kept apart so the command line can
map them onto distinct exit codes.
"""


class UnruhNdpaError(Exception):
    """Base class for all package errors."""


class PhysicsError(UnruhNdpaError):
    """The requested state or regime does not exist physically."""


class NonPhysicalStateError(PhysicsError, ValueError):
    """A covariance matrix violates the uncertainty principle."""

    def __init__(self, message: str, eigenvalue: float | None = None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class InstabilityError(PhysicsError):
    """Parameters at or beyond the parametric instability threshold."""


class NumericalError(UnruhNdpaError):
    """A numerical procedure failed to converge."""


class RootFindingError(NumericalError):
    pass


class StepCollapseError(NumericalError):
    """Adaptive integrator step size collapsed."""

    def __init__(self, message: str, t_fail: float | None = None):
        super().__init__(message)
        self.t_fail = t_fail


class ConfigError(UnruhNdpaError, ValueError):
    """Malformed or inconsistent run configuration."""
