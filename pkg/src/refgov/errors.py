"""Exception types shared across the package."""


class RefgovError(Exception):
    """Base class for all package errors."""


class ConfigError(RefgovError):
    """Invalid or inconsistent configuration input."""


class DomainError(RefgovError):
    """An argument is outside its mathematical domain (e.g. kappa not in [0,1])."""


class IntegrationOverflowError(RefgovError):
    """State propagation produced a non-finite or runaway value.

    ``state_index`` identifies the first offending state coordinate when known.
    """

    def __init__(self, message: str, state_index: int | None = None):
        super().__init__(message)
        self.state_index = state_index


class BackendUnavailableError(RefgovError):
    """The requested execution backend cannot run in this environment."""


class InfeasibleError(RefgovError):
    """No candidate setpoint was feasible and the configured policy is 'error'."""
