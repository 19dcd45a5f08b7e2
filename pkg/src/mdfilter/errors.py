"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A run configuration failed validation."""


class DegenerateConditioningError(ValueError):
    """A detection outcome has probability zero under the given input."""


class EmptyAcceptanceError(ValueError):
    """No detected total passes the shutter trust level; the processed
    distribution is undefined."""
