"""Exception types raised across the package."""


class ValidationError(ValueError):
    """An argument or configuration value violates a documented constraint."""


class StateError(RuntimeError):
    """An operation was called in an object state that does not permit it."""


class FormatError(ValueError):
    """A file could not be parsed into the expected structure."""
