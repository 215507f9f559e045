"""Exception hierarchy shared by the library and the command line."""


class BlabError(Exception):
    """Base class for every error raised by blab."""


class DomainViolationError(BlabError, ValueError):
    """An argument lies outside the closed unit disc (or another stated domain)."""


class SpecValidationError(BlabError, ValueError):
    """A problem specification failed validation."""


class InfeasibleSpecError(BlabError, ValueError):
    """Parameters cannot satisfy the constraints they are meant to certify."""


class RootFindingError(BlabError):
    """Polynomial roots could not be located to the requested residual."""


class NonConvergenceError(BlabError):
    """An escalating search hit its limit before meeting the tolerance."""

    def __init__(self, message: str, best_error: float = float("inf"), best=None):
        super().__init__(message)
        self.best_error = best_error
        self.best = best


class StageFailureError(BlabError):
    """A pipeline stage failed; carries the stage tag and the audit log so far."""

    def __init__(self, stage: str, message: str, budget_log=None, partial=None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.budget_log = list(budget_log or [])
        self.partial = partial


class PropertyViolationError(BlabError):
    """A constructed object failed one of its verified properties."""

    def __init__(self, property_name: str, message: str):
        super().__init__(f"property ({property_name}) violated: {message}")
        self.property_name = property_name
