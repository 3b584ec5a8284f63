"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid domain, solver, or experiment parameters."""


class ShapeMismatchError(ValueError):
    """Field does not match the basis or grid it is used with."""


class DomainError(ValueError):
    """Argument outside the mathematically admissible range."""


class PreconditionError(ValueError):
    """Input violates a documented precondition (e.g. velocity not divergence-free)."""


class BlowUpError(RuntimeError):
    """Norm explosion or non-finite state detected during time integration.

    Carries the last finite state and the time it was reached, plus the
    partial trajectory and diagnostics collected so far.
    """

    def __init__(self, t, state, trajectory=None, rows=None):
        super().__init__(f"solution blew up shortly after t={t:.6g}")
        self.t = t
        self.state = state
        self.trajectory = trajectory
        self.rows = rows
