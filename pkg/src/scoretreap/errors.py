"""Shared exception types."""


class ConfigError(ValueError):
    """Raised for invalid configuration or parameter combinations."""


class DuplicateKeyError(ValueError):
    """Raised when inserting a key that is already present."""
