"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: bad feature-set name, malformed option values."""


class DataError(ValueError):
    """Invalid input data: malformed corpus files, unknown labels, bad vectors."""


class ModelFormatError(DataError):
    """Model or index file is corrupt, truncated, or version-incompatible."""
