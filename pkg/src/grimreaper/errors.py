"""Exception types shared across the package."""


class GrimReaperError(Exception):
    pass


class DomainError(GrimReaperError, ValueError):
    """A point or profile state left the admissible domain (e.g. y -> 0)."""


class UnsupportedKindError(GrimReaperError, ValueError):
    """The requested closed form does not exist for this surface kind."""


class RigidFamilyError(GrimReaperError, ValueError):
    """The family admits only rigid solutions and has no profile ODE."""


class NoClosedFormError(GrimReaperError, ValueError):
    pass


class IntegrationError(GrimReaperError, RuntimeError):
    """Integration stopped abnormally; ``trajectory`` holds what was computed."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class AmbiguousDichotomyError(GrimReaperError, RuntimeError):
    def __init__(self, message, events=None):
        super().__init__(message)
        self.events = events or []


class DegenerateSurfaceError(GrimReaperError, ArithmeticError):
    pass


class UnsupportedFamilyError(GrimReaperError, ValueError):
    """Operation not defined for this grim-reaper family."""
