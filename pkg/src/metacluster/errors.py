"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised when a run configuration is invalid before any work starts."""


class IntegrityError(RuntimeError):
    """Raised when a structural invariant of a run's outputs is violated."""
