"""Exception types shared across the package."""


class SpinCollapseError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(SpinCollapseError, ValueError):
    """Invalid configuration document, field value, or unknown key."""


class DegenerateStateError(SpinCollapseError, ArithmeticError):
    """An integrator step collapsed the state norm below 1e-6.

    Signals that the time step is too large for the given coupling.
    """

    def __init__(self, message, time=None, trajectory_index=None):
        super().__init__(message)
        self.time = time
        self.trajectory_index = trajectory_index


class WindowResolutionError(SpinCollapseError, ValueError):
    """Trajectory sampling too coarse to resolve the persistence window."""


class ReferenceDivergedError(SpinCollapseError, ArithmeticError):
    """The reference ODE integration produced non-finite values."""
